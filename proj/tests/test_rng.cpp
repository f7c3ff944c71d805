#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "qdd/rng.hpp"

using namespace qdd;

TEST_CASE("philox 4x64-10 known answers") {
    // Frozen from an independent implementation of the same generator.
    struct Case {
        std::array<std::uint64_t, 4> ctr;
        std::array<std::uint64_t, 2> key;
        std::array<std::uint64_t, 4> expect;
    };
    const std::vector<Case> cases = {
        {{0, 0, 0, 0},
         {0, 0},
         {0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL,
          0x7e68b68aec7ba23bULL}},
        {{1, 0, 0, 0},
         {0, 0},
         {0x2f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL,
          0x907d7a052fd5b4dcULL}},
        {{0xffffffffffffffffULL, 0xffffffffffffffffULL, 0xffffffffffffffffULL,
          0xffffffffffffffffULL},
         {0xffffffffffffffffULL, 0xffffffffffffffffULL},
         {0x87b092c3013fe90bULL, 0x438c3c67be8d0224ULL, 0x9cc7d7c69cd777b6ULL,
          0xa09caebf594f0ba0ULL}},
        {{1, 2, 3, 4},
         {0xdeadbeefcafebabeULL, 0x0123456789abcdefULL},
         {0xded4baf7b1479499ULL, 0x89adb344cf31b1c1ULL, 0xfd1b770d8417e634ULL,
          0xdb3e6e8a7922dc48ULL}},
        {{42, 7, 2, 0},
         {0x9e3779b97f4a7c15ULL, 0},
         {0x1a19513aa4e41ceaULL, 0xdac9c1324b89932cULL, 0x7fd2419326ddedcfULL,
          0xa544c48d78423978ULL}},
    };
    for (const auto& c : cases) {
        const auto out = philox::block(c.ctr, c.key);
        for (int i = 0; i < 4; ++i) CHECK(out[i] == c.expect[i]);
    }
}

TEST_CASE("streams are reproducible and distinct") {
    StreamSampler a(123, 5, kStreamNoise);
    StreamSampler b(123, 5, kStreamNoise);
    for (int i = 0; i < 100; ++i) CHECK(a.next_normal() == b.next_normal());

    StreamSampler c(123, 5, kStreamTheta);
    StreamSampler d(123, 6, kStreamNoise);
    StreamSampler e(124, 5, kStreamNoise);
    StreamSampler f(123, 5, kStreamNoise);
    bool all_same_c = true, all_same_d = true, all_same_e = true;
    for (int i = 0; i < 16; ++i) {
        const double r = f.next_uniform();
        all_same_c &= (c.next_uniform() == r);
        all_same_d &= (d.next_uniform() == r);
        all_same_e &= (e.next_uniform() == r);
    }
    CHECK_FALSE(all_same_c);
    CHECK_FALSE(all_same_d);
    CHECK_FALSE(all_same_e);
}

TEST_CASE("uniforms live strictly inside (0,1)") {
    StreamSampler s(7, 0, kStreamTheta);
    for (int i = 0; i < 100000; ++i) {
        const double u = s.next_uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal draws pass the moment gate") {
    // Sample variance of dW/sqrt(dt) must sit in [0.99, 1.01] over 1e6 draws.
    const int n = 1000000;
    double sum = 0.0, sumsq = 0.0;
    for (int p = 0; p < 1000; ++p) {
        StreamSampler s(2024, static_cast<std::uint64_t>(p), kStreamNoise);
        for (int i = 0; i < 1000; ++i) {
            const double z = s.next_normal();
            sum += z;
            sumsq += z * z;
        }
    }
    const double mean = sum / n;
    const double var = (sumsq - n * mean * mean) / (n - 1);
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var > 0.99);
    CHECK(var < 1.01);
}
