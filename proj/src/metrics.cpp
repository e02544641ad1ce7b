#include "c2f/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace c2f {
namespace {

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

}  // namespace

int score_to_class(double score, int k, const DatasetProfile& profile) {
    switch (k) {
        case 7: {
            if (profile.class_edges_acc7.empty())
                throw ProfileError("acc7 undefined for profile " + profile.name);
            const double lo = std::ceil(profile.r_min);
            const double hi = std::floor(profile.r_max);
            double s = std::min(hi, std::max(lo, score));
            return static_cast<int>(std::llround(s) - static_cast<long long>(lo));
        }
        case 5: {
            if (profile.class_edges_acc5.empty())
                throw ProfileError("acc5 undefined for profile " + profile.name);
            int c = 0;
            for (double e : profile.class_edges_acc5)
                if (e <= score) ++c;
            return c;
        }
        case 3:
            return static_cast<int>(score_to_polarity(score, profile));
        case 2:
            return score > 0.0 ? 1 : 0;
        default:
            throw ProfileError("unsupported class count " + std::to_string(k));
    }
}

double class_accuracy(const std::vector<int>& pred, const std::vector<int>& gold) {
    if (gold.empty()) throw EmptyError("accuracy: empty inputs");
    if (pred.size() != gold.size())
        throw DimensionError("accuracy: prediction/gold size mismatch");
    int hit = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) hit += pred[i] == gold[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(gold.size());
}

double macro_f1(const std::vector<int>& pred, const std::vector<int>& gold,
                int n_classes) {
    if (gold.empty()) throw EmptyError("f1: empty inputs");
    if (pred.size() != gold.size())
        throw DimensionError("f1: prediction/gold size mismatch");
    if (n_classes < 2) throw ConfigError("f1: need at least two classes");
    double f1_sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        long long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            const bool p = pred[i] == c, g = gold[i] == c;
            tp += p && g;
            fp += p && !g;
            fn += !p && g;
        }
        const double prec = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double rec = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        f1_sum += prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    }
    return f1_sum / n_classes;
}

double mean_absolute_error(const std::vector<double>& pred,
                           const std::vector<double>& gold) {
    if (gold.empty()) throw EmptyError("mae: empty inputs");
    if (pred.size() != gold.size())
        throw DimensionError("mae: prediction/gold size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) acc += std::fabs(pred[i] - gold[i]);
    return acc / static_cast<double>(gold.size());
}

double pearson_corr(const std::vector<double>& pred, const std::vector<double>& gold) {
    if (gold.size() < 2) throw EmptyError("corr: need at least two points");
    if (pred.size() != gold.size())
        throw DimensionError("corr: prediction/gold size mismatch");
    const double n = static_cast<double>(gold.size());
    double mp = 0.0, mg = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        mp += pred[i];
        mg += gold[i];
    }
    mp /= n;
    mg /= n;
    double spg = 0.0, spp = 0.0, sgg = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const double a = pred[i] - mp, b = gold[i] - mg;
        spg += a * b;
        spp += a * a;
        sgg += b * b;
    }
    if (spp == 0.0 || sgg == 0.0)
        throw DegenerateError("corr: zero variance input");
    return spg / std::sqrt(spp * sgg);
}

double acc2(const std::vector<double>& pred_scores,
            const std::vector<double>& gold_scores, const DatasetProfile& profile) {
    if (pred_scores.size() != gold_scores.size())
        throw DimensionError("acc2: prediction/gold size mismatch");
    long long kept = 0, hit = 0;
    for (std::size_t i = 0; i < gold_scores.size(); ++i) {
        if (score_to_polarity(gold_scores[i], profile) == Polarity::Neutral) continue;
        ++kept;
        hit += sign_of(pred_scores[i]) == sign_of(gold_scores[i]) ? 1 : 0;
    }
    if (kept == 0) throw EmptyError("acc2: no non-neutral gold samples");
    return static_cast<double>(hit) / static_cast<double>(kept);
}

MetricsReport evaluate_outputs(const std::vector<std::string>& texts,
                               const std::vector<Sample>& golds,
                               const DatasetProfile& profile) {
    if (golds.empty()) throw EmptyError("evaluate: no samples");
    if (texts.size() != golds.size())
        throw DimensionError("evaluate: one output per sample required");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    MetricsReport rep;
    rep.dataset = profile.name;
    rep.n = static_cast<int>(golds.size());

    const bool has7 = !profile.class_edges_acc7.empty();
    const bool has5 = !profile.class_edges_acc5.empty();
    std::vector<int> p7, g7, p5, g5, p3, g3;
    std::vector<double> parsed_pred, parsed_gold;     // parsed outputs only
    std::vector<double> sign_pred, sign_gold;         // failures score as 0
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const Sample& s = golds[i];
        const ParseResult pr = parse(texts[i], profile);
        if (has7) g7.push_back(score_to_class(s.gold_score, 7, profile));
        if (has5) g5.push_back(score_to_class(s.gold_score, 5, profile));
        g3.push_back(score_to_class(s.gold_score, 3, profile));
        if (pr.ok()) {
            // every metric is computed from the predicted score; the polarity
            // block is a training-time structure, not the benchmark output
            const double sp = pr.value().score;
            if (has7) p7.push_back(score_to_class(sp, 7, profile));
            if (has5) p5.push_back(score_to_class(sp, 5, profile));
            p3.push_back(score_to_class(sp, 3, profile));
            parsed_pred.push_back(sp);
            parsed_gold.push_back(s.gold_score);
            sign_pred.push_back(sp);
        } else {
            ++rep.n_format_failures;
            if (has7) p7.push_back(-1);
            if (has5) p5.push_back(-1);
            p3.push_back(-1);
            sign_pred.push_back(0.0);
        }
        sign_gold.push_back(s.gold_score);
    }

    rep.acc7 = has7 ? class_accuracy(p7, g7) : nan;
    rep.acc5 = has5 ? class_accuracy(p5, g5) : nan;
    rep.acc3 = class_accuracy(p3, g3);
    rep.f1 = macro_f1(p3, g3, 3);
    try {
        rep.acc2 = acc2(sign_pred, sign_gold, profile);
    } catch (const EmptyError&) {
        rep.acc2 = nan;
    }
    try {
        rep.mae = mean_absolute_error(parsed_pred, parsed_gold);
    } catch (const EmptyError&) {
        rep.mae = nan;
    }
    try {
        rep.corr = pearson_corr(parsed_pred, parsed_gold);
    } catch (const std::runtime_error&) {  // degenerate or too few points
        rep.corr = nan;
    }
    return rep;
}

MetricsReport evaluate(const Policy& policy, const PolicyParams& params,
                       const std::vector<Sample>& samples,
                       const std::string& dataset_label) {
    if (samples.empty()) throw EmptyError("evaluate: no samples");
    DecodeOptions opts;
    opts.greedy = true;
    std::mt19937_64 rng(0);  // unused by greedy decoding
    std::vector<std::string> texts;
    texts.reserve(samples.size());
    for (const Sample& s : samples) {
        const Rollout r = policy.sample_sequence(params, s, opts, rng);
        texts.push_back(policy.vocab().text(r.tokens));
    }
    MetricsReport rep = evaluate_outputs(texts, samples, policy.config().profile);
    rep.dataset = dataset_label;
    return rep;
}

namespace {

std::string fmt_metric(double v) {
    if (std::isnan(v)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

std::string report_kv(const MetricsReport& r) {
    std::ostringstream os;
    os << "dataset:          " << r.dataset << '\n'
       << "samples:          " << r.n << '\n'
       << "format_failures:  " << r.n_format_failures << '\n'
       << "acc7:             " << fmt_metric(r.acc7) << '\n'
       << "acc5:             " << fmt_metric(r.acc5) << '\n'
       << "acc3:             " << fmt_metric(r.acc3) << '\n'
       << "acc2:             " << fmt_metric(r.acc2) << '\n'
       << "f1_macro:         " << fmt_metric(r.f1) << '\n'
       << "mae:              " << fmt_metric(r.mae) << '\n'
       << "corr:             " << fmt_metric(r.corr) << '\n';
    return os.str();
}

std::string report_csv_header() {
    return "label,dataset,n,format_failures,acc7,acc5,acc3,acc2,f1_macro,mae,corr";
}

std::string report_csv_row(const std::string& label, const MetricsReport& r) {
    std::ostringstream os;
    os << label << ',' << r.dataset << ',' << r.n << ',' << r.n_format_failures;
    for (double v : {r.acc7, r.acc5, r.acc3, r.acc2, r.f1, r.mae, r.corr})
        os << ',' << (std::isnan(v) ? std::string("nan") : format_double(v));
    return os.str();
}

}  // namespace c2f
