#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "haptest/exploration.hpp"

namespace haptest {

enum class Schema { MP, SF, CSSF, SF36 };

const char* schema_name(Schema s);
Schema schema_from_name(const std::string& name);

/// Steady-state features are averaged over this trailing window.
inline constexpr double kFeatureTailWindow = 2.0;  // s

/// Upper edges (Hz) of the sliding-spectrum bands; together the bands
/// partition [0, 500] at 1 kHz sampling.
inline constexpr std::array<double, 4> kBandUpperHz{35.0, 65.0, 100.0, 500.0};

struct FeatureVector {
    Schema schema = Schema::MP;
    std::vector<std::string> names;
    Eigen::VectorXd values;
    int label = 0;
};

struct FeatureMatrix {
    Schema schema = Schema::MP;
    std::vector<std::string> names;
    Eigen::MatrixXd values;  // rows x features
    std::vector<int> labels;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
    int column_index(const std::string& name) const;  // -1 if absent
    FeatureMatrix select(const std::vector<int>& columns, Schema schema) const;
    void validate() const;
};

/// Per-record feature digest: everything the feature schemas need from one
/// trial, so a campaign can stream records without retaining the series.
struct RecordDigest {
    ActionKind action = ActionKind::Indentation;
    std::array<double, 9> stats{};  // {fperp, fpar, fmag} x {mean, max, std}
    double psi = 0;                 // tapping
    double tap_peak = 0;            // tapping: max measured normal force
    double kappa_tail = 0;          // indentation: trailing-window means
    double d_tail = 0;
    double mu_tail = 0;             // sliding
    std::array<double, 4> band_fperp{}, band_fpar{};  // sliding spectrum
};

RecordDigest digest_record(const TrialRecord& rec);

/// One tapping + indentation + sliding run of the same object.
struct TrialTuple {
    const TrialRecord* tapping = nullptr;
    const TrialRecord* indentation = nullptr;
    const TrialRecord* sliding = nullptr;
};

/// Mechanical-property features: [psi_hat, kappa_hat, d_hat, mu_hat] —
/// the tapping restitution estimate and the trailing-window means of the
/// identified stiffness, viscosity and friction.
FeatureVector mechanical_features(const TrialTuple& tuple);

/// Statistical interaction-signal features: mean/max/std of the normal
/// force, tangential force and force magnitude per action, the tap peak, and
/// the four sliding-spectrum band means per force axis. The default schema
/// drops the tapping tangential max (a redundant near-zero statistic) for 35
/// features; full36 keeps it.
FeatureVector statistical_features(const TrialTuple& tuple, bool full36 = false);

struct RankedFeature {
    std::string name;
    int column = 0;
    double score = 0;
};

/// Chi-square dependence of each feature on the class label, computed over a
/// 10-bin equal-frequency discretization; sorted descending. A constant
/// feature scores 0.
std::vector<RankedFeature> chi_square_rank(const FeatureMatrix& m);

/// Top-4 chi-square-ranked columns of a statistical feature matrix, or the
/// fixed reference selection (tap peak, sliding tangential mean, indentation
/// magnitude std, indentation normal mean) when fixed_selection is set.
FeatureMatrix cssf_features(const FeatureMatrix& sf, bool fixed_selection = false);

/// Reference CSSF column names, in rank order.
const std::vector<std::string>& cssf_fixed_names();

/// Groups streamed records into (object, trial) tuples and builds feature
/// matrices from their digests.
class FeatureBuilder {
public:
    void add(const TrialRecord& rec);

    /// Builds MP, SF or SF36 from the accumulated tuples (CSSF derives from
    /// SF via cssf_features). Incomplete tuples are dropped and counted.
    FeatureMatrix build(Schema schema) const;

    int complete_tuples() const;
    int incomplete_tuples() const;

private:
    struct Tuple {
        std::optional<RecordDigest> tap, indent, slide;
    };
    std::map<std::pair<int, int>, Tuple> tuples_;
};

void save_feature_csv(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix load_feature_csv(const std::filesystem::path& path, Schema schema);

}  // namespace haptest
