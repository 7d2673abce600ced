#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "totpsi/shamir.hpp"

using namespace totpsi;

namespace {

// all t-subsets of {0..n-1}, lexicographic
std::vector<std::vector<int>> subsets(int n, int t) {
    std::vector<std::vector<int>> out;
    std::vector<int> idx(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (;;) {
        out.push_back(idx);
        int i = t - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - t + i) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < t; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

} // namespace

TEST_CASE("hand-checkable mod-11 vectors") {
    Modulus m(11);
    SharingPolynomial f{{5, 3}}; // 5 + 3x
    auto sh = eval_polynomial(m, f, 3);
    CHECK(sh[0].x == 1);
    CHECK(sh[0].y == 8);
    CHECK(sh[1].x == 2);
    CHECK(sh[1].y == 0);
    CHECK(sh[2].x == 3);
    CHECK(sh[2].y == 3);

    SharingPolynomial z{{0, 2}}; // zero polynomial 2x
    auto zs = eval_polynomial(m, z, 3);
    CHECK(zs[0].y == 2);
    CHECK(zs[1].y == 4);
    CHECK(zs[2].y == 6);

    std::vector<Share> sum(3);
    for (int i = 0; i < 3; ++i)
        sum[static_cast<std::size_t>(i)] = {sh[static_cast<std::size_t>(i)].x,
                                            m.add(sh[static_cast<std::size_t>(i)].y,
                                                  zs[static_cast<std::size_t>(i)].y)};
    CHECK(sum[0].y == 10);
    CHECK(sum[1].y == 4);
    CHECK(sum[2].y == 9);
    // refreshed shares still encode 5
    CHECK(lagrange_at(m, {sum[0], sum[1]}, 0) == 5);
    CHECK(lagrange_at(m, {sum[1], sum[2]}, 0) == 5);
    CHECK(lagrange_at(m, sum, 0) == 5);
}

TEST_CASE("exhaustive t-subset reconstruction identity for n <= 8") {
    Modulus m = Modulus::default_prime();
    Prg prg(std::uint64_t{101});
    for (int n = 3; n <= 8; ++n) {
        for (int t = 2; t <= n; ++t) {
            u128 secret = prg.uniform(m);
            auto sh = share_secret(m, secret, t, n, prg);
            REQUIRE(sh.size() == static_cast<std::size_t>(n));
            for (const auto& sub : subsets(n, t)) {
                std::vector<Share> pts;
                for (int i : sub) pts.push_back(sh[static_cast<std::size_t>(i)]);
                CHECK(lagrange_at(m, pts, 0) == secret);
            }
        }
    }
}

TEST_CASE("zero-share refresh preserves secrets across 500 refreshes") {
    Modulus m = Modulus::default_prime();
    Prg prg(std::uint64_t{102});
    const int n = 5, t = 3;
    u128 secret = prg.uniform(m);
    auto sh = share_secret(m, secret, t, n, prg);
    for (int round = 0; round < 500; ++round) {
        auto zs = zero_shares(m, t, n, prg);
        for (int i = 0; i < n; ++i)
            sh[static_cast<std::size_t>(i)].y =
                m.add(sh[static_cast<std::size_t>(i)].y, zs[static_cast<std::size_t>(i)].y);
        std::vector<Share> pts{sh[0], sh[2], sh[4]};
        CHECK(lagrange_at(m, pts, 0) == secret);
    }
}

TEST_CASE("interpolate recovers coefficients") {
    Modulus m(251);
    Prg prg(std::uint64_t{103});
    for (int trial = 0; trial < 100; ++trial) {
        SharingPolynomial f;
        int t = 2 + static_cast<int>(prg.uniform_u64(4));
        f.coefficients.resize(static_cast<std::size_t>(t));
        for (auto& c : f.coefficients) c = prg.uniform(m);
        auto sh = eval_polynomial(m, f, t);
        auto g = interpolate(m, sh);
        REQUIRE(g.coefficients.size() == f.coefficients.size());
        for (std::size_t i = 0; i < f.coefficients.size(); ++i)
            CHECK(g.coefficients[i] == f.coefficients[i]);
    }
}

TEST_CASE("lagrange input validation") {
    Modulus m(251);
    CHECK_THROWS_AS(lagrange_at(m, {}, 0), DuplicateX);
    CHECK_THROWS_AS(lagrange_at(m, {{1, 3}, {1, 4}}, 0), DuplicateX);
    CHECK_THROWS_AS(lagrange_at(m, {{0, 3}, {1, 4}}, 0), DuplicateX);
}

TEST_CASE("traced reconstruction finds exact holder sets") {
    Modulus m = Modulus::default_prime();
    Prg prg(std::uint64_t{104});
    const int n = 6;
    for (int t = 2; t <= n; ++t) {
        for (int trial = 0; trial < 30; ++trial) {
            u128 secret = prg.uniform(m);
            auto sh = share_secret(m, secret, t, n, prg);
            // holders: party 0 plus a random subset of the others, >= t total
            int extra = t - 1 + static_cast<int>(prg.uniform_u64(
                                    static_cast<std::uint64_t>(n - t + 1)));
            std::vector<int> others{1, 2, 3, 4, 5};
            for (std::size_t i = others.size(); i > 1; --i)
                std::swap(others[i - 1], others[prg.uniform_u64(i)]);
            std::vector<bool> holds(static_cast<std::size_t>(n), false);
            holds[0] = true;
            for (int i = 0; i < extra; ++i)
                holds[static_cast<std::size_t>(others[static_cast<std::size_t>(i)])] = true;

            std::vector<Share> view;
            for (int i = 1; i < n; ++i) {
                u128 y = holds[static_cast<std::size_t>(i)] ? sh[static_cast<std::size_t>(i)].y
                                                            : prg.uniform(m);
                view.push_back({static_cast<std::uint8_t>(i + 1), y});
            }
            auto tr = reconstruct_with_trace(m, sh[0], view, t, secret);
            REQUIRE(tr.secret_matched);
            std::vector<std::uint8_t> expect;
            for (int i = 0; i < n; ++i)
                if (holds[static_cast<std::size_t>(i)])
                    expect.push_back(static_cast<std::uint8_t>(i));
            CHECK(tr.holders == expect);
        }
    }
}

TEST_CASE("below-threshold views never match") {
    Modulus m = Modulus::default_prime();
    Prg prg(std::uint64_t{105});
    const int n = 6, t = 4;
    for (int trial = 0; trial < 200; ++trial) {
        u128 secret = prg.uniform(m);
        auto sh = share_secret(m, secret, t, n, prg);
        // only t-1 total holders (0, 1, 2): every t-subset misses the secret
        std::vector<Share> view;
        for (int i = 1; i < n; ++i) {
            u128 y = i <= 2 ? sh[static_cast<std::size_t>(i)].y : prg.uniform(m);
            view.push_back({static_cast<std::uint8_t>(i + 1), y});
        }
        auto tr = reconstruct_with_trace(m, sh[0], view, t, secret);
        CHECK_FALSE(tr.secret_matched);
        CHECK(tr.holders.empty());
    }
}

TEST_CASE("trace preconditions") {
    Modulus m(251);
    Prg prg(std::uint64_t{106});
    auto sh = share_secret(m, 7, 2, 3, prg);
    CHECK_THROWS_AS(
        reconstruct_with_trace(m, Share{2, 0}, {sh[1], sh[2]}, 2, 7), DuplicateX);
    CHECK_THROWS_AS(share_secret(m, 7, 1, 3, prg), BadThreshold);
    CHECK_THROWS_AS(share_secret(m, 7, 4, 3, prg), BadThreshold);
}
