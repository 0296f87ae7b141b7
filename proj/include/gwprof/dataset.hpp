#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "gwprof/error.hpp"
#include "gwprof/matrix.hpp"
#include "gwprof/rng.hpp"

namespace gwprof {

/// Labelled feature matrix. Labels are dense class ids into `class_names`.
struct Dataset {
    Matrix x;
    std::vector<int> y;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;

    std::size_t size() const noexcept { return y.size(); }
    std::size_t n_classes() const noexcept { return class_names.size(); }

    void validate() const {
        if (x.rows() != y.size()) throw LabelMismatch("dataset has " + std::to_string(x.rows()) + " rows but " +
                                                      std::to_string(y.size()) + " labels");
        for (int label : y) {
            if (label < 0 || static_cast<std::size_t>(label) >= class_names.size()) {
                throw LabelMismatch("label id out of range");
            }
        }
    }

    Dataset subset(std::span<const std::size_t> idx) const {
        Dataset out;
        out.x = x.select_rows(idx);
        out.y.reserve(idx.size());
        for (auto i : idx) out.y.push_back(y[i]);
        out.class_names = class_names;
        out.feature_names = feature_names;
        return out;
    }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> c(n_classes(), 0);
        for (int label : y) ++c[static_cast<std::size_t>(label)];
        return c;
    }
};

/// In-place Fisher-Yates shuffle driven by the library's portable RNG.
template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)));
        std::swap(v[i - 1], v[j]);
    }
}

/// Fold id per row. Each class is shuffled and dealt round-robin, continuing
/// where the previous class stopped so fold sizes stay within one of each other.
inline std::vector<int> stratified_folds(std::span<const int> y, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("need at least 2 folds");
    int max_label = -1;
    for (int label : y) max_label = std::max(max_label, label);
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label + 1));
    for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<std::size_t>(y[i])].push_back(i);
    Rng rng(seed);
    std::vector<int> fold(y.size(), 0);
    int next = 0;
    for (auto& members : by_class) {
        shuffle_in_place(members, rng);
        for (auto i : members) {
            fold[i] = next;
            next = (next + 1) % k;
        }
    }
    return fold;
}

/// Throws TooFewPerClass unless every present class has at least `k` rows.
inline void require_per_class(const Dataset& ds, int k) {
    const auto counts = ds.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0 && counts[c] < static_cast<std::size_t>(k)) {
            throw TooFewPerClass("class '" + ds.class_names[c] + "' has " + std::to_string(counts[c]) +
                                 " rows, fewer than " + std::to_string(k) + " folds");
        }
    }
}

/// Z-score transform fitted on training rows; zero-variance columns map to 0.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const Matrix& x) {
        Standardizer s;
        const auto n = static_cast<double>(x.rows());
        s.mean.assign(x.cols(), 0.0);
        s.scale.assign(x.cols(), 1.0);
        for (std::size_t c = 0; c < x.cols(); ++c) {
            double mu = 0;
            for (std::size_t r = 0; r < x.rows(); ++r) mu += x(r, c);
            mu /= n;
            double var = 0;
            for (std::size_t r = 0; r < x.rows(); ++r) var += (x(r, c) - mu) * (x(r, c) - mu);
            const double sd = x.rows() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
            s.mean[c] = mu;
            s.scale[c] = sd > 1e-12 ? sd : 1.0;
        }
        return s;
    }

    void apply(std::span<const double> in, std::span<double> out) const {
        for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - mean[c]) / scale[c];
    }

    Matrix transform(const Matrix& x) const {
        Matrix out(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) apply(x.row(r), out.row(r));
        return out;
    }
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be written
/// to per-index slots; the first exception is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = 0) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace gwprof
