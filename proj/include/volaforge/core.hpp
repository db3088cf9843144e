#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace volaforge {

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid parameterization (bad model/sim/CLI configuration).
struct ConfigError : Error {
    using Error::Error;
};

/// Sample too small for the requested split/window arithmetic.
struct SizingError : Error {
    using Error::Error;
};

/// Malformed or inconsistent input data (NaN, misalignment, CSV issues).
struct DataError : Error {
    using Error::Error;
};

/// Numerical failure: singular design, iteration limit, diverging training.
struct NumericError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG with named sub-streams
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// mt19937_64 wrapper. All randomness in the library flows from one top-level
/// seed through `stream()` derivations, so parallel workers get independent,
/// reproducible streams regardless of scheduling. Normal draws use Box-Muller
/// with a fixed formula (no cached spare) to keep the draw sequence portable.
class Rng {
  public:
    explicit Rng(std::uint64_t seed)
        : seed_(seed), gen_(detail::splitmix64(seed)) {}

    /// Independent child stream identified by an integer salt.
    [[nodiscard]] Rng stream(std::uint64_t salt) const {
        return Rng(detail::splitmix64(seed_ ^ detail::splitmix64(salt + 0x9e3779b97f4a7c15ULL)));
    }

    /// Independent child stream identified by name.
    [[nodiscard]] Rng stream(std::string_view name) const {
        return stream(detail::fnv1a(name));
    }

    std::uint64_t next() { return gen_(); }

    /// Uniform on the open interval (0, 1).
    double u01() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (cosine branch only).
    double gauss() {
        const double u1 = u01();
        const double u2 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double gauss(double mean, double sd) { return mean + sd * gauss(); }

    /// N(0, sd^2) restricted to [lo, hi] by rejection.
    double truncated_gauss(double sd, double lo, double hi) {
        for (;;) {
            const double x = sd * gauss();
            if (x >= lo && x <= hi) return x;
        }
    }

    /// Uniform index in [0, n). Rejection sampling, no modulo bias.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % static_cast<std::uint64_t>(n);
        std::uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return static_cast<std::size_t>(r % static_cast<std::uint64_t>(n));
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Compensated (Neumaier) summation
// ---------------------------------------------------------------------------

/// Error-free-transform accumulator. Used wherever an exact algebraic
/// identity between sums must survive floating point (e.g. RV = RV+ + RV-).
class KahanSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(const std::vector<double>& xs) {
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

// ---------------------------------------------------------------------------
// Parallel helper
// ---------------------------------------------------------------------------

/// Runs fn(i) for i in [0, n). Work items must be independent and write only
/// to their own slots; results are then identical for any worker count.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    if (n == 0) return;
    unsigned workers = jobs > 0 ? static_cast<unsigned>(jobs)
                                : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace volaforge
