#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "idskit/error.hpp"

namespace idskit {

/// C x C count table; rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    std::vector<std::int64_t> counts;  // row-major C x C
    std::vector<std::string> class_names;

    std::size_t size() const { return class_names.size(); }
    std::int64_t& at(std::size_t t, std::size_t p) { return counts[t * size() + p]; }
    std::int64_t at(std::size_t t, std::size_t p) const { return counts[t * size() + p]; }
    std::int64_t total() const;
    std::int64_t row_sum(std::size_t t) const;
    std::int64_t col_sum(std::size_t p) const;

    std::string to_csv() const;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
};

struct MetricReport {
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    /// How many per-class ratios hit the 0/0 -> 0 convention.
    std::size_t zero_division_count = 0;
    ConfusionMatrix confusion;

    std::string to_json() const;
};

struct RuntimeRecord {
    std::string model_name;
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;
    double total_seconds = 0.0;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 std::size_t n_classes,
                                 const std::vector<std::string>& class_names = {});

MetricReport classification_report(const ConfusionMatrix& cm);

struct RankedEntry {
    std::string name;
    MetricReport report;
    RuntimeRecord runtime;
};

/// Descending weighted F1; ties broken by higher accuracy, then lower total
/// runtime, then name.
std::vector<RankedEntry> rank_models(std::vector<RankedEntry> entries);

/// Wall time of `thunk` on the monotonic clock. Failures propagate with the
/// elapsed time attached to the message.
template <typename Fn>
auto time_phase(const std::string& label, Fn&& thunk)
    -> std::pair<decltype(thunk()), double> {
    const auto start = std::chrono::steady_clock::now();
    try {
        auto result = thunk();
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        return {std::move(result), elapsed.count()};
    } catch (const std::exception& e) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        throw Error(label + " failed after " + std::to_string(elapsed.count()) +
                    " s: " + e.what());
    }
}

double time_phase_void(const std::string& label, const std::function<void()>& thunk);

}  // namespace idskit
