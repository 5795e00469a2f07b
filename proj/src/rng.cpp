#include "ionbath/rng.hpp"

#include <cmath>

namespace ionbath {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}
}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
}

Rng Rng::for_realization(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t sm = master_seed;
    std::uint64_t base = splitmix64(sm);
    std::uint64_t mix = base ^ (index + 0x632be59bd9b4e019ULL);
    return Rng(splitmix64(mix));
}

std::uint64_t Rng::next_u64() {
    std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_pos() {
    return 1.0 - uniform();
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u, v, r2;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        r2 = u * u + v * v;
    } while (r2 >= 1.0 || r2 == 0.0);
    double f = std::sqrt(-2.0 * std::log(r2) / r2);
    cached_normal_ = v * f;
    has_cached_normal_ = true;
    return u * f;
}

double Rng::exponential(double mean) {
    return -mean * std::log(uniform_pos());
}

double Rng::rayleigh(double sigma) {
    return sigma * std::sqrt(-2.0 * std::log(uniform_pos()));
}

std::int64_t Rng::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) {
        // product-of-uniforms inversion
        double limit = std::exp(-mean), prod = uniform_pos();
        std::int64_t k = 0;
        while (prod > limit) {
            prod *= uniform_pos();
            ++k;
        }
        return k;
    }
    // Hormann's PTRS transformed rejection, exact for large means
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        double u = uniform() - 0.5;
        double v = uniform_pos();
        double us = 0.5 - std::abs(u);
        double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            kf * log_mean - mean - std::lgamma(kf + 1.0))
            return static_cast<std::int64_t>(kf);
    }
}

Vec3 Rng::isotropic_direction() {
    double c = uniform(-1.0, 1.0);
    double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    double phi = uniform(0.0, 2.0 * M_PI);
    return {s * std::cos(phi), s * std::sin(phi), c};
}

Mat3 Rng::random_rotation() {
    // Shoemake's subgroup algorithm: uniform quaternion from three uniforms.
    double u1 = uniform(), u2 = uniform(), u3 = uniform();
    double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    double t2 = 2.0 * M_PI * u2, t3 = 2.0 * M_PI * u3;
    double qx = a * std::sin(t2), qy = a * std::cos(t2);
    double qz = b * std::sin(t3), qw = b * std::cos(t3);

    Mat3 r;
    r(0, 0) = 1 - 2 * (qy * qy + qz * qz);
    r(0, 1) = 2 * (qx * qy - qz * qw);
    r(0, 2) = 2 * (qx * qz + qy * qw);
    r(1, 0) = 2 * (qx * qy + qz * qw);
    r(1, 1) = 1 - 2 * (qx * qx + qz * qz);
    r(1, 2) = 2 * (qy * qz - qx * qw);
    r(2, 0) = 2 * (qx * qz - qy * qw);
    r(2, 1) = 2 * (qy * qz + qx * qw);
    r(2, 2) = 1 - 2 * (qx * qx + qy * qy);
    return r;
}

}  // namespace ionbath
