#include "totpsi/shamir.hpp"

#include <algorithm>

namespace totpsi {

u128 SharingPolynomial::eval(const Modulus& m, u128 x) const {
    u128 acc = 0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
        acc = m.add(m.mul(acc, x), *it);
    return acc;
}

static void check_threshold(int t, int n) {
    if (t <= 1 || t > n) throw BadThreshold("need 1 < t <= n");
    if (n > 254) throw BadThreshold("party count exceeds share encoding");
}

std::vector<Share> eval_polynomial(const Modulus& m, const SharingPolynomial& poly, int n) {
    std::vector<Share> shares;
    shares.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        u128 x = static_cast<u128>(i + 1);
        shares.push_back({static_cast<std::uint8_t>(i + 1), poly.eval(m, x)});
    }
    return shares;
}

std::vector<Share> share_secret(const Modulus& m, u128 secret, int t, int n, Prg& prg) {
    check_threshold(t, n);
    SharingPolynomial poly;
    poly.coefficients.resize(static_cast<std::size_t>(t));
    poly.coefficients[0] = secret % m.p();
    for (int i = 1; i < t; ++i)
        poly.coefficients[static_cast<std::size_t>(i)] = prg.uniform(m);
    return eval_polynomial(m, poly, n);
}

std::vector<Share> zero_shares(const Modulus& m, int t, int n, Prg& prg) {
    return share_secret(m, 0, t, n, prg);
}

u128 lagrange_at(const Modulus& m, const std::vector<Share>& points, u128 x0) {
    if (points.empty()) throw DuplicateX("no interpolation points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].x == 0) throw DuplicateX("interpolation point at x = 0");
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (points[i].x == points[j].x) throw DuplicateX("duplicate x coordinate");
    }
    u128 acc = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        u128 num = 1, den = 1;
        u128 xi = points[i].x;
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (j == i) continue;
            u128 xj = points[j].x;
            num = m.mul(num, m.sub(x0, xj));
            den = m.mul(den, m.sub(xi, xj));
        }
        acc = m.add(acc, m.mul(points[i].y, m.mul(num, m.inv(den))));
    }
    return acc;
}

SharingPolynomial interpolate(const Modulus& m, const std::vector<Share>& points) {
    // Sum of y_i * L_i(x) with L_i built by incremental polynomial products.
    const std::size_t k = points.size();
    SharingPolynomial result;
    result.coefficients.assign(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        // numerator poly prod_{j != i} (x - x_j)
        std::vector<u128> num{1};
        u128 den = 1;
        u128 xi = points[i].x;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            u128 xj = points[j].x;
            den = m.mul(den, m.sub(xi, xj));
            std::vector<u128> next(num.size() + 1, 0);
            for (std::size_t d = 0; d < num.size(); ++d) {
                next[d + 1] = m.add(next[d + 1], num[d]);
                next[d] = m.add(next[d], m.mul(num[d], m.neg(xj)));
            }
            num = std::move(next);
        }
        u128 scale = m.mul(points[i].y, m.inv(den));
        for (std::size_t d = 0; d < num.size(); ++d)
            result.coefficients[d] = m.add(result.coefficients[d], m.mul(num[d], scale));
    }
    return result;
}

TraceResult reconstruct_with_trace(const Modulus& m, const Share& own_share,
                                   const std::vector<Share>& others, int t,
                                   u128 expected_secret) {
    if (own_share.x != 1) throw DuplicateX("own share must sit at x = 1");
    check_threshold(t, static_cast<int>(others.size()) + 1);

    const int pick = t - 1;
    const int cand = static_cast<int>(others.size());
    std::vector<int> idx(static_cast<std::size_t>(pick));
    for (int i = 0; i < pick; ++i) idx[static_cast<std::size_t>(i)] = i;

    TraceResult result;
    for (;;) {
        std::vector<Share> subset{own_share};
        for (int i : idx) subset.push_back(others[static_cast<std::size_t>(i)]);
        if (lagrange_at(m, subset, 0) == expected_secret) {
            result.secret_matched = true;
            result.reconstructed_poly = interpolate(m, subset);
            result.holders.push_back(0);
            for (std::size_t i = 0; i < others.size(); ++i) {
                u128 at = result.reconstructed_poly.eval(m, others[i].x);
                if (at == others[i].y)
                    result.holders.push_back(static_cast<std::uint8_t>(others[i].x - 1));
            }
            return result;
        }
        // next lexicographic combination
        int i = pick - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == cand - pick + i) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < pick; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return result;
}

} // namespace totpsi
