// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/metrics.hpp"

#include <sstream>

#include "mst/losses.hpp"

namespace mst {

double metric_distance(const MotionSequence& a, const MotionSequence& b) {
    return seq_distance(a, b, /*include_global=*/false);
}

double metric_cc(const std::vector<GeneratedPair>& pairs) {
    if (pairs.empty()) throw error("metric_cc: empty pair set");
    double total = 0;
    for (const auto& p : pairs) {
        if (p.content->style_label != p.style->style_label)
            throw error("metric_cc: pair with differing style labels ('" +
                        p.content->style_label + "' vs '" + p.style->style_label + "')");
        total += metric_distance(p.generated, *p.content);
    }
    return total / static_cast<double>(pairs.size());
}

double metric_sc(const std::vector<GeneratedPair>& pairs) {
    if (pairs.empty()) throw error("metric_sc: empty pair set");
    double total = 0;
    for (const auto& p : pairs) {
        if (p.content->content_label != p.style->content_label)
            throw error("metric_sc: pair with differing content labels ('" +
                        p.content->content_label + "' vs '" + p.style->content_label + "')");
        total += metric_distance(p.generated, *p.style);
    }
    return total / static_cast<double>(pairs.size());
}

double metric_scpp(const std::vector<GeneratedPair>& pairs,
                   const std::vector<MotionSequence>& train, std::size_t* skipped) {
    if (pairs.empty()) throw error("metric_scpp: empty pair set");
    double total = 0;
    std::size_t used = 0, skip = 0;
    for (const auto& p : pairs) {
        double inner = 0;
        std::size_t cell = 0;
        for (const auto& t : train) {
            if (t.content_label == p.content->content_label &&
                t.style_label == p.style->style_label) {
                inner += metric_distance(p.generated, t);
                ++cell;
            }
        }
        if (cell == 0) {
            ++skip;
            continue;
        }
        total += inner / static_cast<double>(cell);
        ++used;
    }
    if (skipped) *skipped = skip;
    if (used == 0) throw error("metric_scpp: every pair had an empty pseudo-ground-truth cell");
    return total / static_cast<double>(used);
}

namespace {

struct Acc {
    double cc = 0, sc = 0, scpp = 0;
    std::size_t n_cc = 0, n_sc = 0, n_scpp = 0;

    MetricsReport::Row row() const {
        MetricsReport::Row r;
        if (n_cc) r.cc = cc / static_cast<double>(n_cc);
        if (n_sc) r.sc = sc / static_cast<double>(n_sc);
        if (n_scpp) r.scpp = scpp / static_cast<double>(n_scpp);
        r.pairs_cc = n_cc;
        r.pairs_sc = n_sc;
        r.pairs_scpp = n_scpp;
        return r;
    }
};

void put(std::ostringstream& os, const std::optional<double>& v) {
    os << ",";
    if (v) os << *v;
}

}  // namespace

MetricsReport evaluate_metrics(const std::vector<MotionSequence>& test,
                               const std::vector<MotionSequence>& train, const TransferFn& fn) {
    if (test.empty()) throw error("evaluate_metrics: empty test set");
    Acc average, same_cnt, diff_cnt;
    std::map<std::string, Acc> by_content, by_style;
    std::size_t skipped = 0;

    for (const auto& content : test) {
        for (const auto& style : test) {
            const MotionSequence gen = fn(content, style);
            const bool same_content = content.content_label == style.content_label;
            std::vector<Acc*> sinks{&average, same_content ? &same_cnt : &diff_cnt,
                                    &by_content[content.content_label],
                                    &by_style[style.style_label]};

            if (content.style_label == style.style_label) {
                const double d = metric_distance(gen, content);
                for (Acc* a : sinks) {
                    a->cc += d;
                    ++a->n_cc;
                }
            }
            if (same_content) {
                const double d = metric_distance(gen, style);
                for (Acc* a : sinks) {
                    a->sc += d;
                    ++a->n_sc;
                }
            }
            double inner = 0;
            std::size_t cell = 0;
            for (const auto& t : train) {
                if (t.content_label == content.content_label &&
                    t.style_label == style.style_label) {
                    inner += metric_distance(gen, t);
                    ++cell;
                }
            }
            if (cell == 0) {
                ++skipped;
            } else {
                const double d = inner / static_cast<double>(cell);
                for (Acc* a : sinks) {
                    a->scpp += d;
                    ++a->n_scpp;
                }
            }
        }
    }

    MetricsReport report;
    report.average = average.row();
    report.same_content = same_cnt.row();
    report.diff_content = diff_cnt.row();
    for (const auto& [k, v] : by_content) report.by_content[k] = v.row();
    for (const auto& [k, v] : by_style) report.by_style[k] = v.row();
    report.skipped_scpp = skipped;
    return report;
}

std::string metrics_report_csv(const MetricsReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << "kind,name,cc,sc,scpp,pairs_cc,pairs_sc,pairs_scpp,skipped_scpp\n";
    auto emit = [&os](const std::string& kind, const std::string& name,
                      const MetricsReport::Row& r, std::size_t skipped) {
        os << kind << "," << name;
        put(os, r.cc);
        put(os, r.sc);
        put(os, r.scpp);
        os << "," << r.pairs_cc << "," << r.pairs_sc << "," << r.pairs_scpp << "," << skipped
           << "\n";
    };
    emit("overall", "average", report.average, report.skipped_scpp);
    emit("overall", "same_content", report.same_content, 0);
    emit("overall", "diff_content", report.diff_content, 0);
    for (const auto& [k, v] : report.by_content) emit("content", k, v, 0);
    for (const auto& [k, v] : report.by_style) emit("style", k, v, 0);
    return os.str();
}

}  // namespace mst
