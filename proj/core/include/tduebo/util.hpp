#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>

namespace tduebo {

/// splitmix64 step; a cheap, well-mixed 64-bit generator used only to
/// derive independent seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic sub-seed for stream `stream` of `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base;
    (void)splitmix64(s);
    s ^= 0x6a09e667f3bcc909ULL + stream;
    return splitmix64(s);
}

/// Incremental FNV-1a 64-bit hash, used for split/model fingerprints.
class Fnv1a64 {
public:
    void update(const void* data, std::size_t size) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash_ ^= p[i];
            hash_ *= 0x100000001b3ULL;
        }
    }

    void update(double v) { update(&v, sizeof(v)); }
    void update(std::uint64_t v) { update(&v, sizeof(v)); }
    void update(const std::string& s) { update(s.data(), s.size()); }

    void update(const Eigen::MatrixXd& m) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                update(m(i, j));
    }

    void update(const Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i)
            update(v(i));
    }

    std::uint64_t digest() const { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

/// Formats a double with 9 significant digits, the precision used by
/// every emitted CSV report file.
inline std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

/// The double a reader of an emitted CSV obtains back, i.e. the value
/// rounded through its 9-significant-digit decimal representation.
inline double round9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::strtod(buf, nullptr);
}

/// Standard normal density.
inline double norm_pdf(double z) {
    static const double inv_sqrt_2pi = 0.3989422804014327;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

/// Standard normal CDF via erfc, accurate far into the tails.
inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

} // namespace tduebo
