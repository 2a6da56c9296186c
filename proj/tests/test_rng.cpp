#include "faqr/parallel.hpp"
#include "faqr/rng.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

using faqr::Philox4x32;
using faqr::RandomStream;
using faqr::StreamDomain;

TEST_CASE("philox known-answer vectors") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and separated") {
    RandomStream a(42, StreamDomain::generic, 3);
    RandomStream b(42, StreamDomain::generic, 3);
    RandomStream other_index(42, StreamDomain::generic, 4);
    RandomStream other_domain(42, StreamDomain::lambda_simulation, 3);
    RandomStream other_seed(43, StreamDomain::generic, 3);
    int same_index = 0;
    int same_domain = 0;
    int same_seed = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a();
        REQUIRE(x == b());
        same_index += x == other_index();
        same_domain += x == other_domain();
        same_seed += x == other_seed();
    }
    CHECK(same_index == 0);
    CHECK(same_domain == 0);
    CHECK(same_seed == 0);
}

TEST_CASE("uniform draws stay in the open unit interval with the right moments") {
    RandomStream s(7, StreamDomain::generic, 0);
    const int n = 200000;
    double sum = 0.0;
    double sum_sq = 0.0;
    int positive = 0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum_sq += u * u;
        positive += s.rademacher() > 0.0;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sum_sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12.0).epsilon(0.01));
    CHECK(std::abs(positive / static_cast<double>(n) - 0.5) < 0.005);
}

TEST_CASE("derived seeds differ across indices and are stable") {
    CHECK(faqr::derive_seed(1, 0) == faqr::derive_seed(1, 0));
    CHECK(faqr::derive_seed(1, 0) != faqr::derive_seed(1, 1));
    CHECK(faqr::derive_seed(1, 0) != faqr::derive_seed(2, 0));
}

TEST_CASE("parallel_for fills every slot once and rethrows task failures") {
    for (unsigned threads : {1u, 2u, 8u}) {
        std::vector<int> hits(1000, 0);
        faqr::parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += 1; });
        for (int h : hits) REQUIRE(h == 1);
    }
    CHECK_THROWS_AS(faqr::parallel_for(100, 4,
                                       [](std::size_t i) {
                                           if (i == 37) throw std::runtime_error("boom");
                                       }),
                    std::runtime_error);
    std::atomic<int> calls{0};
    faqr::parallel_for(0, 4, [&](std::size_t) { ++calls; });
    CHECK(calls == 0);
}
