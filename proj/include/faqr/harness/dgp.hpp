#pragma once

#include "faqr/factor_model.hpp"

#include <cstdint>
#include <string>

namespace faqr::harness {

enum class NoiseKind { gaussian, student_t };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double scale = 0.5;  // sd for gaussian, degrees of freedom for student_t

    static NoiseSpec gaussian(double sd = 0.5) { return {NoiseKind::gaussian, sd}; }
    static NoiseSpec student_t(double df) { return {NoiseKind::student_t, df}; }
    std::string label() const;
};

/// X = F B^T + U, Y = F gamma* + U beta* + eps. F, U standard normal; B ~ Unif(-1, 1)
/// drawn from loading_seed so it stays fixed across replicates.
struct DgpSpec {
    Index n = 200;
    Index d = 200;
    int m = 2;
    Vector beta_star;
    Vector gamma_star;
    NoiseSpec noise;
    std::uint64_t loading_seed = 1;
    std::uint64_t replicate_seed = 1;

    void validate() const;

    /// beta* = (1.8, 1.6, -1.2, 0, ...), gamma* = (0.5, 0.5).
    static DgpSpec accuracy(Index n, Index d, NoiseSpec noise);
    /// beta* = (w, w, w, 0, ...), gamma* = (0.5, 0.5).
    static DgpSpec power(Index n, Index d, double w, NoiseSpec noise);
};

struct DgpTruth {
    Vector beta_star;
    Vector gamma_star;
    Matrix f;
    Matrix u;
    Matrix b;
};

struct DgpSample {
    DataMatrix data;
    DgpTruth truth;
};

DgpSample generate_dgp(const DgpSpec& spec);

}  // namespace faqr::harness
