#include "idskit/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace idskit {

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::row_sum(std::size_t t) const {
    std::int64_t s = 0;
    for (std::size_t p = 0; p < size(); ++p) s += at(t, p);
    return s;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t p) const {
    std::int64_t s = 0;
    for (std::size_t t = 0; t < size(); ++t) s += at(t, p);
    return s;
}

std::string ConfusionMatrix::to_csv() const {
    std::ostringstream out;
    out << "true\\pred";
    for (const auto& name : class_names) out << ',' << name;
    out << '\n';
    for (std::size_t t = 0; t < size(); ++t) {
        out << class_names[t];
        for (std::size_t p = 0; p < size(); ++p) out << ',' << at(t, p);
        out << '\n';
    }
    return out.str();
}

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 std::size_t n_classes,
                                 const std::vector<std::string>& class_names) {
    if (y_true.size() != y_pred.size())
        throw DimensionError("confusion_matrix: label vectors differ in length");
    ConfusionMatrix cm;
    if (class_names.empty()) {
        for (std::size_t c = 0; c < n_classes; ++c)
            cm.class_names.push_back("class_" + std::to_string(c));
    } else {
        if (class_names.size() != n_classes)
            throw DimensionError("confusion_matrix: class name count mismatch");
        cm.class_names = class_names;
    }
    cm.counts.assign(n_classes * n_classes, 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if (t < 0 || static_cast<std::size_t>(t) >= n_classes)
            throw LabelError("confusion_matrix: true label " + std::to_string(t) +
                             " out of range at position " + std::to_string(i));
        if (p < 0 || static_cast<std::size_t>(p) >= n_classes)
            throw LabelError("confusion_matrix: predicted label " + std::to_string(p) +
                             " out of range at position " + std::to_string(i));
        ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return cm;
}

MetricReport classification_report(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total <= 0) throw DimensionError("classification_report: empty confusion matrix");
    const std::size_t C = cm.size();

    MetricReport rep;
    rep.confusion = cm;
    std::int64_t trace = 0;
    for (std::size_t c = 0; c < C; ++c) trace += cm.at(c, c);
    rep.accuracy = static_cast<double>(trace) / static_cast<double>(total);

    auto ratio = [&rep](std::int64_t num, std::int64_t den) {
        if (den == 0) {
            ++rep.zero_division_count;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };

    rep.per_class.resize(C);
    double w_p = 0.0, w_r = 0.0, w_f = 0.0;
    double m_p = 0.0, m_r = 0.0, m_f = 0.0;
    std::int64_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
    for (std::size_t c = 0; c < C; ++c) {
        const std::int64_t tp = cm.at(c, c);
        const std::int64_t fp = cm.col_sum(c) - tp;
        const std::int64_t fn = cm.row_sum(c) - tp;
        ClassMetrics& cls = rep.per_class[c];
        cls.support = cm.row_sum(c);
        cls.precision = ratio(tp, tp + fp);
        cls.recall = ratio(tp, tp + fn);
        if (cls.precision + cls.recall > 0.0)
            cls.f1 = 2.0 * cls.precision * cls.recall / (cls.precision + cls.recall);
        else {
            cls.f1 = 0.0;
            ++rep.zero_division_count;
        }
        const double w = static_cast<double>(cls.support) / static_cast<double>(total);
        w_p += w * cls.precision;
        w_r += w * cls.recall;
        w_f += w * cls.f1;
        m_p += cls.precision;
        m_r += cls.recall;
        m_f += cls.f1;
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fn;
    }
    rep.weighted_precision = w_p;
    rep.weighted_recall = w_r;
    rep.weighted_f1 = w_f;
    rep.macro_precision = m_p / static_cast<double>(C);
    rep.macro_recall = m_r / static_cast<double>(C);
    rep.macro_f1 = m_f / static_cast<double>(C);
    rep.micro_precision =
        tp_sum + fp_sum == 0 ? 0.0 : static_cast<double>(tp_sum) / static_cast<double>(tp_sum + fp_sum);
    rep.micro_recall =
        tp_sum + fn_sum == 0 ? 0.0 : static_cast<double>(tp_sum) / static_cast<double>(tp_sum + fn_sum);
    return rep;
}

std::string MetricReport::to_json() const {
    nlohmann::ordered_json j;
    j["accuracy"] = accuracy;
    j["weighted"] = {{"precision", weighted_precision},
                     {"recall", weighted_recall},
                     {"f1", weighted_f1}};
    j["macro"] = {{"precision", macro_precision}, {"recall", macro_recall}, {"f1", macro_f1}};
    j["micro"] = {{"precision", micro_precision}, {"recall", micro_recall}};
    j["zero_division_count"] = zero_division_count;
    nlohmann::ordered_json classes = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        classes.push_back({{"class", confusion.class_names[c]},
                           {"precision", per_class[c].precision},
                           {"recall", per_class[c].recall},
                           {"f1", per_class[c].f1},
                           {"support", per_class[c].support}});
    }
    j["per_class"] = classes;
    return j.dump(2);
}

std::vector<RankedEntry> rank_models(std::vector<RankedEntry> entries) {
    if (entries.empty()) throw ConfigError("rank_models: nothing to rank");
    std::stable_sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.report.weighted_f1 != b.report.weighted_f1)
            return a.report.weighted_f1 > b.report.weighted_f1;
        if (a.report.accuracy != b.report.accuracy) return a.report.accuracy > b.report.accuracy;
        if (a.runtime.total_seconds != b.runtime.total_seconds)
            return a.runtime.total_seconds < b.runtime.total_seconds;
        return a.name < b.name;
    });
    return entries;
}

double time_phase_void(const std::string& label, const std::function<void()>& thunk) {
    auto [_, seconds] = time_phase(label, [&] {
        thunk();
        return 0;
    });
    return seconds;
}

}  // namespace idskit
