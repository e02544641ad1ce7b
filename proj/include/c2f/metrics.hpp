#pragma once

#include <string>
#include <vector>

#include "c2f/policy.hpp"

namespace c2f {

// Class index for the K-way accuracy families. K=7 needs the seven-class
// profile (integer rounding with clipping), K=5 the five-class edge profile
// (left-closed bins), K=3 is the polarity band, K=2 the strict sign.
// ProfileError when the profile lacks the requested binning.
int score_to_class(double score, int k, const DatasetProfile& profile);

double class_accuracy(const std::vector<int>& pred, const std::vector<int>& gold);

// Macro-averaged F1 over gold classes 0..n_classes-1. Predictions outside
// that range (e.g. the -1 placeholder for unparseable outputs) never match
// and never form a class of their own.
double macro_f1(const std::vector<int>& pred, const std::vector<int>& gold,
                int n_classes);

double mean_absolute_error(const std::vector<double>& pred,
                           const std::vector<double>& gold);

// DegenerateError when either side has zero variance.
double pearson_corr(const std::vector<double>& pred, const std::vector<double>& gold);

// Sign agreement with gold-neutral samples excluded; EmptyError when nothing
// is left to score.
double acc2(const std::vector<double>& pred_scores,
            const std::vector<double>& gold_scores, const DatasetProfile& profile);

struct MetricsReport {
    std::string dataset;
    int n = 0;
    int n_format_failures = 0;
    double acc7 = 0.0, acc5 = 0.0, acc3 = 0.0, acc2 = 0.0;
    double f1 = 0.0, mae = 0.0, corr = 0.0;
};

// Scores raw output texts against gold samples. Unparseable texts count as
// wrong in every accuracy and are excluded from MAE / correlation; metrics a
// profile does not define, and undefined statistics, come back as NaN.
MetricsReport evaluate_outputs(const std::vector<std::string>& texts,
                               const std::vector<Sample>& golds,
                               const DatasetProfile& profile);

// Greedy-decodes every sample and scores the result.
MetricsReport evaluate(const Policy& policy, const PolicyParams& params,
                       const std::vector<Sample>& samples,
                       const std::string& dataset_label);

std::string report_kv(const MetricsReport& r);
std::string report_csv_header();
std::string report_csv_row(const std::string& label, const MetricsReport& r);

}  // namespace c2f
