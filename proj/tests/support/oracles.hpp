#pragma once

// Independent reference implementations used only by tests. Each is written
// the slow, direct way so it shares no code path with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "expand/bounding_box.hpp"
#include "expand/frame.hpp"

namespace oracle_ref {

using Image = std::vector<std::vector<double>>;  // [row][col]

inline Image to_image(const expand::Frame& f) {
    Image img(expand::kFrameSide, std::vector<double>(expand::kFrameSide));
    for (int r = 0; r < expand::kFrameSide; ++r)
        for (int c = 0; c < expand::kFrameSide; ++c) img[r][c] = f.at(r, c);
    return img;
}

inline expand::Frame random_frame(std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> px(expand::kFramePixels);
    for (auto& p : px) p = u(rng);
    return expand::Frame(px);
}

// Mirror without repeating the edge: -1 -> 1, n -> n - 2.
inline int mirror(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

// Full 2-D kernel, normalized over the whole square.
inline Image gaussian_kernel_2d(int size, double sigma) {
    const int r = size / 2;
    Image k(size, std::vector<double>(size));
    double total = 0.0;
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j) {
            k[i + r][j + r] = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
            total += k[i + r][j + r];
        }
    for (auto& row : k)
        for (auto& v : row) v /= total;
    return k;
}

inline Image convolve(const Image& img, int size, double sigma) {
    const int n = static_cast<int>(img.size());
    const int r = size / 2;
    const auto k = gaussian_kernel_2d(size, sigma);
    Image out(n, std::vector<double>(n, 0.0));
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                for (int j = -r; j <= r; ++j) acc += k[i + r][j + r] * img[mirror(y + i, n)][mirror(x + j, n)];
            out[y][x] = acc;
        }
    return out;
}

inline std::vector<std::vector<bool>> mask(const std::vector<expand::BoundingBox>& boxes) {
    std::vector<std::vector<bool>> m(expand::kFrameSide, std::vector<bool>(expand::kFrameSide, false));
    for (int row = 0; row < expand::kFrameSide; ++row)
        for (int col = 0; col < expand::kFrameSide; ++col)
            for (const auto& b : boxes)
                if (col >= b.x && col < b.x + b.w && row >= b.y && row < b.y + b.h) m[row][col] = true;
    return m;
}

// Hinge loss written straight from the case table.
inline double advantage_loss(const std::vector<double>& q, int a, int label, double margin) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(q.size()); ++i)
        if (q[i] > q[best]) best = i;
    const bool greedy = best == a;
    if (label > 0) return greedy ? 0.0 : q[best] - q[a];
    if (!greedy) return 0.0;
    double second = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(q.size()); ++i)
        if (i != a) second = std::max(second, q[i]);
    return q[a] - (second - margin);
}

inline double invariance_loss(const std::vector<double>& q, const std::vector<std::vector<double>>& aug) {
    double total = 0.0;
    for (const auto& v : aug) {
        double s = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) s += std::fabs(q[i] - v[i]);
        total += s / static_cast<double>(q.size());
    }
    return total / static_cast<double>(aug.size());
}

// Pearson chi-square goodness-of-fit p-value.
inline double chi_square_p(const std::vector<long>& observed, const std::vector<double>& expected) {
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double d = static_cast<double>(observed[i]) - expected[i];
        stat += d * d / expected[i];
    }
    boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

inline double chi_square_uniform_p(const std::vector<long>& observed) {
    long n = 0;
    for (long o : observed) n += o;
    return chi_square_p(observed, std::vector<double>(observed.size(), static_cast<double>(n) / observed.size()));
}

// One-sample Kolmogorov-Smirnov p-value against U(lo, hi), using the
// asymptotic Kolmogorov distribution with Stephens' small-sample correction.
inline double ks_uniform_p(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = (xs[i] - lo) / (hi - lo);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace oracle_ref
