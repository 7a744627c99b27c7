#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "haptest/features.hpp"

namespace haptest {

// --- Gaussian naive Bayes ----------------------------------------------------

struct GnbModel {
    std::vector<int> classes;      // sorted ascending
    Eigen::VectorXd log_priors;    // per class
    Eigen::MatrixXd means;         // classes x features
    Eigen::MatrixXd variances;     // floored, > 0

    Eigen::Index feature_count() const { return means.cols(); }
};

GnbModel gnb_fit(const Eigen::MatrixXd& x, const std::vector<int>& labels);
GnbModel gnb_fit(const FeatureMatrix& m);

struct GnbPrediction {
    int label = 0;
    Eigen::VectorXd log_posteriors;  // unnormalized, per class
};

/// Argmax of log prior + sum of per-feature Gaussian log densities; ties go
/// to the lowest class id.
GnbPrediction gnb_predict(const GnbModel& model, const Eigen::VectorXd& x);

// --- Gaussian mixture model --------------------------------------------------

struct GmmModel {
    Eigen::VectorXd weights;     // k, sums to 1
    Eigen::MatrixXd means;       // k x features
    Eigen::MatrixXd variances;   // k x features, diagonal covariances, floored
    double log_likelihood = 0;   // total, at the last EM iteration
    int iterations = 0;
    std::vector<double> log_likelihood_trace;  // per EM iteration
};

/// Diagonal-covariance EM with k-means++ initialization. Stops when the
/// total log-likelihood improves by less than 1e-6 or after 500 iterations.
GmmModel gmm_fit(const Eigen::MatrixXd& x, int k, std::uint64_t seed);

/// Most responsible component per row.
std::vector<int> gmm_assign(const GmmModel& model, const Eigen::MatrixXd& x);

// --- Clustering metrics ------------------------------------------------------

/// Normalized mutual information, 2 MI / (H(a) + H(b)), in [0, 1]. Two
/// single-cluster partitions are identical, hence 1; if only one side is
/// degenerate the MI is 0 and so is the score.
double nmi(std::span<const int> a, std::span<const int> b);

/// Maximum-score assignment (Hungarian algorithm) used to align cluster ids
/// with labels when reporting a clustering confusion matrix.
std::vector<int> hungarian_match(const Eigen::MatrixXd& score);

// --- Evaluation --------------------------------------------------------------

struct RecognitionReport {
    double accuracy_mean = 0;
    double accuracy_std = 0;
    Eigen::MatrixXd confusion;  // row-normalized, true class x predicted
    std::vector<double> per_class_recall;
    std::vector<int> classes;
    double nmi_mean = 0;
    double nmi_std = 0;
    bool has_clustering = false;
};

/// Stratified k-fold cross-validation of the naive Bayes classifier,
/// reshuffled every repetition; accuracies are per-repetition.
RecognitionReport cross_validate(const FeatureMatrix& m, int folds = 4,
                                 int repetitions = 100, std::uint64_t seed = 1);

struct ClusteringScore {
    double nmi_mean = 0;
    double nmi_std = 0;
    Eigen::MatrixXd confusion;  // after Hungarian alignment, row-normalized
    std::vector<int> classes;
};

/// Fits a GMM `repetitions` times on the z-scored features and scores each
/// clustering against the labels with NMI.
ClusteringScore evaluate_clustering(const FeatureMatrix& m, int k,
                                    int repetitions = 40, std::uint64_t seed = 1);

struct AblationRow {
    std::vector<std::string> features;
    double accuracy_mean = 0;
    double accuracy_std = 0;
};

/// Cross-validates every nonempty feature subset (15 rows for the 4
/// mechanical properties), in ascending subset-size order.
std::vector<AblationRow> ablation(const FeatureMatrix& m, int folds = 4,
                                  int repetitions = 100, std::uint64_t seed = 1);

/// Columnwise z-scoring; constant columns are left centered.
Eigen::MatrixXd zscore(const Eigen::MatrixXd& x);

}  // namespace haptest
