#include "haptest/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "haptest/errors.hpp"
#include "haptest/rng.hpp"

namespace haptest {

namespace {

constexpr double kGmmVarianceFloor = 1e-6;
constexpr double kGmmTolerance = 1e-6;
constexpr int kGmmMaxIterations = 500;

std::vector<int> sorted_classes(const std::vector<int>& labels) {
    std::vector<int> classes(labels);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    return classes;
}

double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * std::log(2.0 * M_PI * var) - d * d / (2.0 * var);
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

GnbModel gnb_fit(const Eigen::MatrixXd& x, const std::vector<int>& labels) {
    if (x.rows() == 0) throw DataError("naive Bayes: empty training set");
    if (static_cast<Eigen::Index>(labels.size()) != x.rows())
        throw DataError("naive Bayes: label/row count mismatch");

    GnbModel model;
    model.classes = sorted_classes(labels);
    const auto n_classes = static_cast<Eigen::Index>(model.classes.size());
    const Eigen::Index n_features = x.cols();
    model.log_priors.resize(n_classes);
    model.means.resize(n_classes, n_features);
    model.variances.resize(n_classes, n_features);

    // Per-column variance floor keeps degenerate classes usable.
    Eigen::RowVectorXd col_mean = x.colwise().mean();
    Eigen::RowVectorXd col_var =
        (x.rowwise() - col_mean).array().square().colwise().mean();
    Eigen::RowVectorXd floor = 1e-9 * (col_var.array() + 1.0);

    for (Eigen::Index c = 0; c < n_classes; ++c) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            if (labels[static_cast<std::size_t>(r)] == model.classes[static_cast<std::size_t>(c)])
                rows.push_back(r);
        if (rows.empty()) throw DataError("naive Bayes: empty class");
        Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), n_features);
        for (std::size_t i = 0; i < rows.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
        const Eigen::RowVectorXd mean = sub.colwise().mean();
        Eigen::RowVectorXd var =
            (sub.rowwise() - mean).array().square().colwise().mean();
        var = var.cwiseMax(floor);
        model.log_priors(c) = std::log(static_cast<double>(rows.size()) /
                                       static_cast<double>(x.rows()));
        model.means.row(c) = mean;
        model.variances.row(c) = var;
    }
    return model;
}

GnbModel gnb_fit(const FeatureMatrix& m) {
    m.validate();
    return gnb_fit(m.values, m.labels);
}

GnbPrediction gnb_predict(const GnbModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.feature_count())
        throw DataError("naive Bayes: feature dimension mismatch");
    GnbPrediction out;
    const auto n_classes = static_cast<Eigen::Index>(model.classes.size());
    out.log_posteriors.resize(n_classes);
    Eigen::Index best = 0;
    for (Eigen::Index c = 0; c < n_classes; ++c) {
        double lp = model.log_priors(c);
        for (Eigen::Index j = 0; j < x.size(); ++j)
            lp += log_normal_pdf(x(j), model.means(c, j), model.variances(c, j));
        out.log_posteriors(c) = lp;
        if (lp > out.log_posteriors(best)) best = c;  // ties keep lowest id
    }
    out.label = model.classes[static_cast<std::size_t>(best)];
    return out;
}

namespace {

Eigen::MatrixXd kmeanspp_centers(const Eigen::MatrixXd& x, int k,
                                 std::mt19937_64& rng) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd centers(k, x.cols());
    std::uniform_int_distribution<Eigen::Index> uniform(0, n - 1);
    centers.row(0) = x.row(uniform(rng));
    Eigen::VectorXd d2 =
        (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (Eigen::Index i = 0; i < n; ++i) {
                target -= d2(i);
                if (target <= 0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = uniform(rng);
        }
        centers.row(c) = x.row(pick);
        d2 = d2.cwiseMin(
            (x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    return centers;
}

}  // namespace

GmmModel gmm_fit(const Eigen::MatrixXd& x, int k, std::uint64_t seed) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (k <= 0) throw DataError("GMM: component count must be > 0");
    if (n < k) throw DataError("GMM: fewer rows than components");

    std::mt19937_64 rng(splitmix64(seed));
    GmmModel m;
    m.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
    m.means = kmeanspp_centers(x, k, rng);
    Eigen::RowVectorXd col_mean = x.colwise().mean();
    Eigen::RowVectorXd col_var =
        (x.rowwise() - col_mean).array().square().colwise().mean();
    col_var = col_var.cwiseMax(kGmmVarianceFloor);
    m.variances = col_var.replicate(k, 1);

    Eigen::MatrixXd log_resp(n, k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < kGmmMaxIterations; ++it) {
        // E step.
        for (Eigen::Index c = 0; c < k; ++c) {
            const double logw = std::log(std::max(m.weights(c), 1e-300));
            for (Eigen::Index i = 0; i < n; ++i) {
                double lp = logw;
                for (Eigen::Index j = 0; j < d; ++j)
                    lp += log_normal_pdf(x(i, j), m.means(c, j), m.variances(c, j));
                log_resp(i, c) = lp;
            }
        }
        double ll = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mx = log_resp.row(i).maxCoeff();
            const double lse =
                mx + std::log((log_resp.row(i).array() - mx).exp().sum());
            ll += lse;
            log_resp.row(i) = (log_resp.row(i).array() - lse).exp();
        }
        m.iterations = it + 1;
        m.log_likelihood = ll;
        m.log_likelihood_trace.push_back(ll);

        // M step (log_resp now holds responsibilities).
        const Eigen::VectorXd nk = log_resp.colwise().sum();
        for (Eigen::Index c = 0; c < k; ++c) {
            const double w = std::max(nk(c), 1e-12);
            m.weights(c) = nk(c) / static_cast<double>(n);
            const Eigen::RowVectorXd mean =
                (log_resp.col(c).transpose() * x) / w;
            Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(d);
            for (Eigen::Index i = 0; i < n; ++i)
                var += log_resp(i, c) *
                       (x.row(i) - mean).array().square().matrix();
            m.means.row(c) = mean;
            m.variances.row(c) = (var / w).cwiseMax(kGmmVarianceFloor);
        }
        m.weights /= m.weights.sum();

        if (std::isfinite(prev_ll) && ll - prev_ll < kGmmTolerance) break;
        prev_ll = ll;
    }
    return m;
}

std::vector<int> gmm_assign(const GmmModel& m, const Eigen::MatrixXd& x) {
    const Eigen::Index k = m.weights.size();
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        for (Eigen::Index c = 0; c < k; ++c) {
            double lp = std::log(std::max(m.weights(c), 1e-300));
            for (Eigen::Index j = 0; j < x.cols(); ++j)
                lp += log_normal_pdf(x(i, j), m.means(c, j), m.variances(c, j));
            if (lp > best) {
                best = lp;
                arg = static_cast<int>(c);
            }
        }
        out[static_cast<std::size_t>(i)] = arg;
    }
    return out;
}

double nmi(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw DataError("NMI: labelings differ in length");
    if (a.empty()) throw DataError("NMI: empty labelings");
    const double n = static_cast<double>(a.size());

    std::map<int, double> pa, pb;
    std::map<std::pair<int, int>, double> pab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        pa[a[i]] += 1.0;
        pb[b[i]] += 1.0;
        pab[{a[i], b[i]}] += 1.0;
    }
    double ha = 0, hb = 0, mi = 0;
    for (auto& [key, cnt] : pa) ha -= (cnt / n) * std::log(cnt / n);
    for (auto& [key, cnt] : pb) hb -= (cnt / n) * std::log(cnt / n);
    for (auto& [key, cnt] : pab) {
        const double pxy = cnt / n;
        const double px = pa[key.first] / n;
        const double py = pb[key.second] / n;
        mi += pxy * std::log(pxy / (px * py));
    }
    if (ha + hb == 0.0) return 1.0;  // both single-cluster, identical partitions
    const double score = 2.0 * mi / (ha + hb);
    return std::clamp(score, 0.0, 1.0);
}

std::vector<int> hungarian_match(const Eigen::MatrixXd& score) {
    const int rows = static_cast<int>(score.rows());
    const int cols = static_cast<int>(score.cols());
    const int n = std::max(rows, cols);
    // Pad to square and minimize negated score.
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
    cost.topLeftCorner(rows, cols) = -score;

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) -
                                   u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> match(static_cast<std::size_t>(rows), -1);
    for (int j = 1; j <= n; ++j) {
        const int i = p[static_cast<std::size_t>(j)];
        if (i >= 1 && i <= rows && j <= cols) match[static_cast<std::size_t>(i - 1)] = j - 1;
    }
    return match;
}

RecognitionReport cross_validate(const FeatureMatrix& m, int folds,
                                 int repetitions, std::uint64_t seed) {
    m.validate();
    if (folds < 2) throw DataError("cross-validation needs >= 2 folds");
    if (repetitions < 1) throw DataError("cross-validation needs >= 1 repetition");

    RecognitionReport report;
    report.classes = sorted_classes(m.labels);
    const int n_classes = static_cast<int>(report.classes.size());
    std::map<int, int> class_index;
    for (int c = 0; c < n_classes; ++c)
        class_index[report.classes[static_cast<std::size_t>(c)]] = c;

    std::map<int, std::vector<Eigen::Index>> by_class;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        by_class[m.labels[static_cast<std::size_t>(r)]].push_back(r);
    for (const auto& [label, rows] : by_class)
        if (static_cast<int>(rows.size()) < folds)
            throw DataError("class " + std::to_string(label) +
                            " has fewer samples than folds");

    std::mt19937_64 rng(splitmix64(seed));
    Eigen::MatrixXd confusion_counts = Eigen::MatrixXd::Zero(n_classes, n_classes);
    std::vector<double> accuracies;
    accuracies.reserve(static_cast<std::size_t>(repetitions));

    std::vector<int> fold_of(static_cast<std::size_t>(m.rows()), 0);
    for (int rep = 0; rep < repetitions; ++rep) {
        // Stratified fold assignment, reshuffled per repetition.
        for (auto& [label, rows] : by_class) {
            std::shuffle(rows.begin(), rows.end(), rng);
            for (std::size_t i = 0; i < rows.size(); ++i)
                fold_of[static_cast<std::size_t>(rows[i])] =
                    static_cast<int>(i % static_cast<std::size_t>(folds));
        }
        Eigen::Index correct = 0;
        for (int f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> train_rows, test_rows;
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                (fold_of[static_cast<std::size_t>(r)] == f ? test_rows : train_rows)
                    .push_back(r);
            Eigen::MatrixXd train(static_cast<Eigen::Index>(train_rows.size()), m.cols());
            std::vector<int> train_labels(train_rows.size());
            for (std::size_t i = 0; i < train_rows.size(); ++i) {
                train.row(static_cast<Eigen::Index>(i)) = m.values.row(train_rows[i]);
                train_labels[i] = m.labels[static_cast<std::size_t>(train_rows[i])];
            }
            const GnbModel model = gnb_fit(train, train_labels);
            for (const Eigen::Index r : test_rows) {
                const auto pred = gnb_predict(model, m.values.row(r).transpose());
                const int t = class_index[m.labels[static_cast<std::size_t>(r)]];
                const int p = class_index[pred.label];
                confusion_counts(t, p) += 1.0;
                if (pred.label == m.labels[static_cast<std::size_t>(r)]) ++correct;
            }
        }
        accuracies.push_back(static_cast<double>(correct) /
                             static_cast<double>(m.rows()));
    }

    report.accuracy_mean =
        std::accumulate(accuracies.begin(), accuracies.end(), 0.0) /
        static_cast<double>(accuracies.size());
    report.accuracy_std = sample_std(accuracies, report.accuracy_mean);
    report.confusion = confusion_counts;
    for (int t = 0; t < n_classes; ++t) {
        const double row_sum = confusion_counts.row(t).sum();
        if (row_sum > 0) report.confusion.row(t) /= row_sum;
        report.per_class_recall.push_back(report.confusion(t, t));
    }
    return report;
}

Eigen::MatrixXd zscore(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd z = x;
    const Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::RowVectorXd std_dev =
        (x.rowwise() - mean).array().square().colwise().mean().sqrt();
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        if (std_dev(c) == 0.0) std_dev(c) = 1.0;
    z = (x.rowwise() - mean).array().rowwise() / std_dev.array();
    return z;
}

ClusteringScore evaluate_clustering(const FeatureMatrix& m, int k,
                                    int repetitions, std::uint64_t seed) {
    m.validate();
    const Eigen::MatrixXd z = zscore(m.values);
    ClusteringScore out;
    out.classes = sorted_classes(m.labels);
    const int n_classes = static_cast<int>(out.classes.size());
    std::map<int, int> class_index;
    for (int c = 0; c < n_classes; ++c)
        class_index[out.classes[static_cast<std::size_t>(c)]] = c;

    std::vector<double> scores;
    Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(n_classes, n_classes);
    for (int rep = 0; rep < repetitions; ++rep) {
        const GmmModel model = gmm_fit(z, k, mix_seed(seed, static_cast<std::uint64_t>(rep)));
        const std::vector<int> clusters = gmm_assign(model, z);
        scores.push_back(nmi(clusters, m.labels));

        // Align cluster ids with labels for the confusion matrix.
        Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, n_classes);
        for (std::size_t i = 0; i < clusters.size(); ++i)
            counts(clusters[i], class_index[m.labels[i]]) += 1.0;
        const std::vector<int> match = hungarian_match(counts);
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            int mapped = match[static_cast<std::size_t>(clusters[i])];
            if (mapped < 0 || mapped >= n_classes) {
                Eigen::Index arg = 0;
                counts.row(clusters[i]).maxCoeff(&arg);
                mapped = static_cast<int>(arg);
            }
            confusion(class_index[m.labels[i]], mapped) += 1.0;
        }
    }
    out.nmi_mean = std::accumulate(scores.begin(), scores.end(), 0.0) /
                   static_cast<double>(scores.size());
    out.nmi_std = sample_std(scores, out.nmi_mean);
    for (int t = 0; t < n_classes; ++t) {
        const double row_sum = confusion.row(t).sum();
        if (row_sum > 0) confusion.row(t) /= row_sum;
    }
    out.confusion = confusion;
    return out;
}

std::vector<AblationRow> ablation(const FeatureMatrix& m, int folds,
                                  int repetitions, std::uint64_t seed) {
    m.validate();
    const int n = static_cast<int>(m.cols());
    if (n > 16) throw DataError("ablation over more than 16 features is not supported");
    std::vector<unsigned> masks;
    for (unsigned mask = 1; mask < (1u << n); ++mask) masks.push_back(mask);
    std::stable_sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
        return __builtin_popcount(a) < __builtin_popcount(b);
    });

    std::vector<AblationRow> rows;
    for (const unsigned mask : masks) {
        std::vector<int> cols;
        for (int j = 0; j < n; ++j)
            if (mask & (1u << j)) cols.push_back(j);
        const FeatureMatrix sub = m.select(cols, m.schema);
        const RecognitionReport rep = cross_validate(sub, folds, repetitions, seed);
        AblationRow row;
        for (const int c : cols) row.features.push_back(m.names[static_cast<std::size_t>(c)]);
        row.accuracy_mean = rep.accuracy_mean;
        row.accuracy_std = rep.accuracy_std;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace haptest
