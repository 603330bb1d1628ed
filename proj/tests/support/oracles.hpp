#pragma once
// Straight-line reference computations for the tests. Nothing here calls the
// library; inputs are plain vectors so the two code paths stay independent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace oracle {

struct Rgb {
    int w = 0, h = 0;
    std::vector<float> px;  // interleaved RGB
    float get(int x, int y, int c) const { return px[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }
};

struct Bits {
    int w = 0, h = 0;
    std::vector<std::uint8_t> b;
    int get(int x, int y) const { return b[static_cast<std::size_t>(y) * w + x]; }
};

struct Settings {
    bool crop = true;
    double target = 0.4, lo = 0.3, hi = 0.5, threshold = 0.5;
    int side = 1024, patch = 16;
};

struct Box {
    int x0, y0, s;
};

inline bool band_reachable(long area, int min_side, int max_side, double lo, double hi) {
    for (int s = min_side; s <= max_side; ++s) {
        const double f = static_cast<double>(area) / (static_cast<double>(s) * s);
        if (f >= lo && f <= hi) return true;
    }
    return false;
}

inline Box crop_box(const Bits& m, const Settings& st) {
    long area = 0;
    int bx0 = m.w, by0 = m.h, bx1 = -1, by1 = -1;
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x)
            if (m.get(x, y)) {
                ++area;
                bx0 = std::min(bx0, x), by0 = std::min(by0, y), bx1 = std::max(bx1, x), by1 = std::max(by1, y);
            }
    if (area == 0) throw std::runtime_error("empty mask");
    const int bw = bx1 - bx0 + 1, bh = by1 - by0 + 1, shortest = std::min(m.w, m.h);
    const double ideal = std::sqrt(area / st.target);
    int s = static_cast<int>(std::ceil(ideal));
    if (s < std::max(bw, bh)) s = std::max(bw, bh);
    if (s > shortest) s = shortest;
    auto ok = [&](int side) {
        const double f = static_cast<double>(area) / (static_cast<double>(side) * side);
        return f >= st.lo && f <= st.hi;
    };
    if (!ok(s)) {
        int best = -1;
        for (int t = std::max(bw, bh); t <= shortest; ++t) {
            if (!ok(t)) continue;
            if (best < 0 || std::fabs(t - ideal) <= std::fabs(best - ideal)) best = t;
        }
        if (best > 0) s = best;
    }
    auto place = [&](int lo, int hi, int extent) {
        int start = static_cast<int>(std::floor((lo + hi + 1 - s) / 2.0));
        int mn = 0, mx = extent - s;
        if (s >= hi - lo + 1) {
            mn = std::max(mn, hi + 1 - s);
            mx = std::min(mx, lo);
        }
        return std::min(std::max(start, mn), mx);
    };
    return {place(bx0, bx1, m.w), place(by0, by1, m.h), s};
}

/// Bilinear sample with half-pixel centres, clamped at the border.
inline std::vector<float> bilinear(const Rgb& im, int ow, int oh) {
    std::vector<float> out(static_cast<std::size_t>(ow) * oh * 3);
    for (int y = 0; y < oh; ++y) {
        double sy = (y + 0.5) * im.h / static_cast<double>(oh) - 0.5;
        sy = std::min(std::max(sy, 0.0), im.h - 1.0);
        const int y0 = static_cast<int>(std::floor(sy)), y1 = std::min(y0 + 1, im.h - 1);
        const double fy = sy - y0;
        for (int x = 0; x < ow; ++x) {
            double sx = (x + 0.5) * im.w / static_cast<double>(ow) - 0.5;
            sx = std::min(std::max(sx, 0.0), im.w - 1.0);
            const int x0 = static_cast<int>(std::floor(sx)), x1 = std::min(x0 + 1, im.w - 1);
            const double fx = sx - x0;
            for (int c = 0; c < 3; ++c) {
                const double a = (1.0 - fx) * im.get(x0, y0, c) + fx * im.get(x1, y0, c);
                const double b = (1.0 - fx) * im.get(x0, y1, c) + fx * im.get(x1, y1, c);
                out[(static_cast<std::size_t>(y) * ow + x) * 3 + c] = static_cast<float>((1.0 - fy) * a + fy * b);
            }
        }
    }
    return out;
}

/// ReMOVE with the (mean, std) pooling features. Returns nullopt for masks
/// that leave one side empty at patch resolution.
inline std::optional<double> remove_mock(const Rgb& image, const Bits& mask, const Settings& st) {
    Rgb im = image;
    Bits mk = mask;
    if (st.crop) {
        const Box bx = crop_box(mask, st);
        im = Rgb{bx.s, bx.s, std::vector<float>(static_cast<std::size_t>(bx.s) * bx.s * 3)};
        mk = Bits{bx.s, bx.s, std::vector<std::uint8_t>(static_cast<std::size_t>(bx.s) * bx.s)};
        for (int y = 0; y < bx.s; ++y)
            for (int x = 0; x < bx.s; ++x) {
                for (int c = 0; c < 3; ++c)
                    im.px[(static_cast<std::size_t>(y) * bx.s + x) * 3 + c] = image.get(bx.x0 + x, bx.y0 + y, c);
                mk.b[static_cast<std::size_t>(y) * bx.s + x] = static_cast<std::uint8_t>(mask.get(bx.x0 + x, bx.y0 + y));
            }
    }
    const int n = st.side;
    const std::vector<float> big = (im.w == n && im.h == n) ? im.px : bilinear(im, n, n);

    const int g = n / st.patch;
    const double cell = static_cast<double>(st.patch) * st.patch;
    std::vector<double> sum_m(6, 0.0), sum_u(6, 0.0);
    long count_m = 0, count_u = 0;
    for (int r = 0; r < g; ++r) {
        for (int c = 0; c < g; ++c) {
            int hits = 0;
            for (int y = r * st.patch; y < (r + 1) * st.patch; ++y)
                for (int x = c * st.patch; x < (c + 1) * st.patch; ++x) {
                    const long sx = std::min<long>((2L * x + 1) * mk.w / (2L * n), mk.w - 1);
                    const long sy = std::min<long>((2L * y + 1) * mk.h / (2L * n), mk.h - 1);
                    hits += mk.get(static_cast<int>(sx), static_cast<int>(sy)) != 0;
                }
            double f[6];
            for (int ch = 0; ch < 3; ++ch) {
                double s = 0.0;
                for (int y = r * st.patch; y < (r + 1) * st.patch; ++y)
                    for (int x = c * st.patch; x < (c + 1) * st.patch; ++x)
                        s += big[(static_cast<std::size_t>(y) * n + x) * 3 + ch];
                const double mean = s / cell;
                double ss = 0.0;
                for (int y = r * st.patch; y < (r + 1) * st.patch; ++y)
                    for (int x = c * st.patch; x < (c + 1) * st.patch; ++x) {
                        const double d = big[(static_cast<std::size_t>(y) * n + x) * 3 + ch] - mean;
                        ss += d * d;
                    }
                f[ch] = mean;
                f[3 + ch] = std::sqrt(ss / cell);
            }
            const bool masked = hits >= st.threshold * cell;
            for (int k = 0; k < 6; ++k) (masked ? sum_m : sum_u)[k] += f[k];
            (masked ? count_m : count_u) += 1;
        }
    }
    if (count_m == 0 || count_u == 0) return std::nullopt;
    double dot = 0, nm = 0, nu = 0;
    for (int k = 0; k < 6; ++k) {
        const double a = sum_m[k] / count_m, b = sum_u[k] / count_u;
        dot += a * b, nm += a * a, nu += b * b;
    }
    return dot / std::sqrt(nm * nu);
}

inline double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / v.size();
}

inline double pop_stddev(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / v.size());
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

/// Equal-count bins after a stable best-first sort: the first n % k bins hold one extra.
inline std::vector<double> bin_means(const std::vector<double>& key, const std::vector<double>& target, int k,
                                     bool lower_better) {
    std::vector<std::size_t> idx(key.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // insertion sort keeps ties in input order
    for (std::size_t i = 1; i < idx.size(); ++i) {
        std::size_t j = i;
        while (j > 0 && (lower_better ? key[idx[j]] < key[idx[j - 1]] : key[idx[j]] > key[idx[j - 1]])) {
            std::swap(idx[j], idx[j - 1]);
            --j;
        }
    }
    std::vector<double> out;
    std::size_t pos = 0;
    for (int b = 0; b < k; ++b) {
        const std::size_t size = idx.size() / k + (static_cast<std::size_t>(b) < idx.size() % k ? 1 : 0);
        double s = 0;
        for (std::size_t i = 0; i < size; ++i) s += target[idx[pos + i]];
        out.push_back(s / static_cast<double>(size));
        pos += size;
    }
    return out;
}

}  // namespace oracle
