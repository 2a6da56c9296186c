#include "faqr/harness/dgp.hpp"

#include "faqr/error.hpp"
#include "faqr/rng.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace faqr::harness {

std::string NoiseSpec::label() const {
    std::ostringstream out;
    if (kind == NoiseKind::gaussian) {
        out << "gaussian(" << scale << ")";
    } else {
        out << "t(" << scale << ")";
    }
    return out.str();
}

void DgpSpec::validate() const {
    require(n >= 2 && d >= 1 && m >= 1, ErrorCode::invalid_argument, "DGP needs n >= 2, d >= 1, m >= 1");
    require(beta_star.size() == d, ErrorCode::dimension_error, "beta* length must equal d");
    require(gamma_star.size() == m, ErrorCode::dimension_error, "gamma* length must equal m");
    require(noise.scale > 0.0, ErrorCode::invalid_argument, "noise sd / degrees of freedom must be positive");
}

DgpSpec DgpSpec::accuracy(Index n, Index d, NoiseSpec noise) {
    DgpSpec spec;
    spec.n = n;
    spec.d = d;
    spec.noise = noise;
    spec.beta_star = Vector::Zero(d);
    const double leading[] = {1.8, 1.6, -1.2};
    for (Index j = 0; j < std::min<Index>(3, d); ++j) spec.beta_star(j) = leading[j];
    spec.gamma_star = Vector::Constant(2, 0.5);
    return spec;
}

DgpSpec DgpSpec::power(Index n, Index d, double w, NoiseSpec noise) {
    DgpSpec spec = accuracy(n, d, noise);
    spec.beta_star.setZero();
    spec.beta_star.head(std::min<Index>(3, d)).setConstant(w);
    return spec;
}

DgpSample generate_dgp(const DgpSpec& spec) {
    spec.validate();
    DgpSample out;
    DgpTruth& truth = out.truth;
    truth.beta_star = spec.beta_star;
    truth.gamma_star = spec.gamma_star;

    RandomStream loading_stream(spec.loading_seed, StreamDomain::dgp_loadings, 0);
    std::uniform_real_distribution<double> loading(-1.0, 1.0);
    truth.b.resize(spec.d, spec.m);
    for (Index j = 0; j < spec.d; ++j) {
        for (int k = 0; k < spec.m; ++k) truth.b(j, k) = loading(loading_stream);
    }

    RandomStream stream(spec.replicate_seed, StreamDomain::dgp_replicate, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    truth.f.resize(spec.n, spec.m);
    truth.u.resize(spec.n, spec.d);
    Vector eps(spec.n);
    for (Index i = 0; i < spec.n; ++i) {
        for (int k = 0; k < spec.m; ++k) truth.f(i, k) = normal(stream);
        for (Index j = 0; j < spec.d; ++j) truth.u(i, j) = normal(stream);
    }
    if (spec.noise.kind == NoiseKind::gaussian) {
        std::normal_distribution<double> noise(0.0, spec.noise.scale);
        for (Index i = 0; i < spec.n; ++i) eps(i) = noise(stream);
    } else {
        std::student_t_distribution<double> noise(spec.noise.scale);
        for (Index i = 0; i < spec.n; ++i) eps(i) = noise(stream);
    }

    out.data.x = truth.f * truth.b.transpose() + truth.u;
    out.data.y = truth.f * truth.gamma_star + truth.u * truth.beta_star + eps;
    return out;
}

}  // namespace faqr::harness
