#include "haptest/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "haptest/errors.hpp"

namespace haptest {

namespace {

constexpr std::size_t kMinFftSamples = 1024;

struct SignalStats {
    double mean = 0, max = 0, std_dev = 0;
};

SignalStats stats_of(const std::vector<double>& v) {
    SignalStats s;
    if (v.empty()) return s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.max = *std::max_element(v.begin(), v.end());
    double acc = 0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.std_dev = std::sqrt(acc / static_cast<double>(v.size()));
    return s;
}

std::array<double, 4> band_means(const std::vector<double>& signal, double fs) {
    const std::size_t n = signal.size();
    std::vector<double> windowed(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double hann =
            0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                 static_cast<double>(n - 1));
        windowed[i] = signal[i] * hann;
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, windowed);

    std::array<double, 4> sums{};
    std::array<int, 4> counts{};
    const std::size_t half = n / 2;
    for (std::size_t k = 0; k <= half; ++k) {
        const double freq = fs * static_cast<double>(k) / static_cast<double>(n);
        int band = -1;
        for (int b = 0; b < 4; ++b) {
            // Half-open split between integer band edges.
            const double upper = kBandUpperHz[static_cast<std::size_t>(b)] + 0.5;
            if (freq < upper || (b == 3 && freq <= kBandUpperHz[3] + 1e-9)) {
                band = b;
                break;
            }
        }
        if (band < 0) continue;
        sums[static_cast<std::size_t>(band)] +=
            2.0 * std::abs(spectrum[k]) / static_cast<double>(n);
        ++counts[static_cast<std::size_t>(band)];
    }
    std::array<double, 4> means{};
    for (int b = 0; b < 4; ++b)
        if (counts[static_cast<std::size_t>(b)] > 0)
            means[static_cast<std::size_t>(b)] =
                sums[static_cast<std::size_t>(b)] /
                counts[static_cast<std::size_t>(b)];
    return means;
}

std::array<double, 9> force_stats(const TrialRecord& rec) {
    std::vector<double> mag(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i)
        mag[i] = std::hypot(rec.f_perp_meas[i], rec.f_par_true[i]);
    const SignalStats sp = stats_of(rec.f_perp_meas);
    const SignalStats st = stats_of(rec.f_par_true);
    const SignalStats sm = stats_of(mag);
    return {sp.mean, sp.max, sp.std_dev, st.mean, st.max,
            st.std_dev, sm.mean, sm.max, sm.std_dev};
}

const char* action_prefix(ActionKind kind) {
    switch (kind) {
        case ActionKind::Tapping: return "tap";
        case ActionKind::Indentation: return "indent";
        case ActionKind::Sliding: return "slide";
    }
    return "?";
}

void append_stat_names(std::vector<std::string>& names, ActionKind kind,
                       bool full36) {
    static const char* kSignals[] = {"fperp", "fpar", "fmag"};
    static const char* kStats[] = {"mean", "max", "std"};
    for (int sig = 0; sig < 3; ++sig)
        for (int st = 0; st < 3; ++st) {
            if (!full36 && kind == ActionKind::Tapping && sig == 1 && st == 1)
                continue;  // tap_fpar_max dropped in the 35-feature schema
            names.push_back(std::string(action_prefix(kind)) + "_" +
                            kSignals[sig] + "_" + kStats[st]);
        }
}

void append_stat_values(std::vector<double>& out,
                        const std::array<double, 9>& stats, ActionKind kind,
                        bool full36) {
    for (int i = 0; i < 9; ++i) {
        if (!full36 && kind == ActionKind::Tapping && i == 4) continue;
        out.push_back(stats[static_cast<std::size_t>(i)]);
    }
}

void require(bool ok, const char* msg) {
    if (!ok) throw DataError(msg);
}

}  // namespace

const char* schema_name(Schema s) {
    switch (s) {
        case Schema::MP: return "MP";
        case Schema::SF: return "SF";
        case Schema::CSSF: return "CSSF";
        case Schema::SF36: return "SF36";
    }
    return "?";
}

Schema schema_from_name(const std::string& name) {
    if (name == "MP") return Schema::MP;
    if (name == "SF") return Schema::SF;
    if (name == "CSSF") return Schema::CSSF;
    if (name == "SF36") return Schema::SF36;
    throw ConfigError("unknown feature schema: " + name);
}

int FeatureMatrix::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

FeatureMatrix FeatureMatrix::select(const std::vector<int>& columns,
                                    Schema new_schema) const {
    FeatureMatrix out;
    out.schema = new_schema;
    out.labels = labels;
    out.values.resize(values.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < columns.size(); ++i) {
        const int c = columns[i];
        if (c < 0 || c >= cols()) throw DataError("feature column out of range");
        out.names.push_back(names[static_cast<std::size_t>(c)]);
        out.values.col(static_cast<Eigen::Index>(i)) = values.col(c);
    }
    return out;
}

void FeatureMatrix::validate() const {
    if (static_cast<Eigen::Index>(names.size()) != values.cols())
        throw DataError("feature matrix: name/column count mismatch");
    if (static_cast<Eigen::Index>(labels.size()) != values.rows())
        throw DataError("feature matrix: label/row count mismatch");
    if (!values.allFinite())
        throw DataError("feature matrix contains non-finite values");
}

RecordDigest digest_record(const TrialRecord& rec) {
    require(!rec.t.empty(), "cannot digest an empty trial record");
    RecordDigest d;
    d.action = rec.action;
    d.stats = force_stats(rec);
    switch (rec.action) {
        case ActionKind::Tapping:
            require(rec.psi_hat.has_value(),
                    "tapping record has no restitution estimate");
            d.psi = *rec.psi_hat;
            d.tap_peak = d.stats[1];  // max measured normal force
            break;
        case ActionKind::Indentation:
            d.kappa_tail = rec.mean_tail(rec.theta_hat[1], kFeatureTailWindow);
            d.d_tail = rec.mean_tail(rec.theta_hat[2], kFeatureTailWindow);
            break;
        case ActionKind::Sliding: {
            d.mu_tail = rec.mean_tail(rec.xi_hat[4], kFeatureTailWindow);
            require(rec.size() >= kMinFftSamples,
                    "sliding series too short for spectrum features (< 1024 samples)");
            const double dt = rec.t[1] - rec.t[0];
            d.band_fperp = band_means(rec.f_perp_meas, 1.0 / dt);
            d.band_fpar = band_means(rec.f_par_true, 1.0 / dt);
            break;
        }
    }
    return d;
}

namespace {

FeatureVector mechanical_from_digests(const RecordDigest& tap,
                                      const RecordDigest& indent,
                                      const RecordDigest& slide, int label) {
    FeatureVector f;
    f.schema = Schema::MP;
    f.label = label;
    f.names = {"psi_hat", "kappa_hat", "d_hat", "mu_hat"};
    f.values.resize(4);
    f.values << tap.psi, indent.kappa_tail, indent.d_tail, slide.mu_tail;
    return f;
}

FeatureVector statistical_from_digests(const RecordDigest& tap,
                                       const RecordDigest& indent,
                                       const RecordDigest& slide, int label,
                                       bool full36) {
    FeatureVector f;
    f.schema = full36 ? Schema::SF36 : Schema::SF;
    f.label = label;
    std::vector<double> vals;
    append_stat_names(f.names, ActionKind::Tapping, full36);
    append_stat_values(vals, tap.stats, ActionKind::Tapping, full36);
    append_stat_names(f.names, ActionKind::Indentation, full36);
    append_stat_values(vals, indent.stats, ActionKind::Indentation, full36);
    append_stat_names(f.names, ActionKind::Sliding, full36);
    append_stat_values(vals, slide.stats, ActionKind::Sliding, full36);
    f.names.push_back("tap_peak");
    vals.push_back(tap.tap_peak);
    for (int b = 0; b < 4; ++b) {
        f.names.push_back("slide_fperp_band" + std::to_string(b + 1) + "_mean");
        vals.push_back(slide.band_fperp[static_cast<std::size_t>(b)]);
    }
    for (int b = 0; b < 4; ++b) {
        f.names.push_back("slide_fpar_band" + std::to_string(b + 1) + "_mean");
        vals.push_back(slide.band_fpar[static_cast<std::size_t>(b)]);
    }
    f.values = Eigen::Map<Eigen::VectorXd>(vals.data(),
                                           static_cast<Eigen::Index>(vals.size()));
    return f;
}

void check_tuple(const TrialTuple& tuple) {
    require(tuple.tapping && tuple.indentation && tuple.sliding,
            "incomplete tuple: tapping, indentation and sliding records are all required");
    require(tuple.tapping->action == ActionKind::Tapping &&
                tuple.indentation->action == ActionKind::Indentation &&
                tuple.sliding->action == ActionKind::Sliding,
            "tuple records are not (tapping, indentation, sliding)");
    require(tuple.tapping->label == tuple.indentation->label &&
                tuple.tapping->label == tuple.sliding->label,
            "tuple records belong to different objects");
}

}  // namespace

FeatureVector mechanical_features(const TrialTuple& tuple) {
    check_tuple(tuple);
    return mechanical_from_digests(digest_record(*tuple.tapping),
                                   digest_record(*tuple.indentation),
                                   digest_record(*tuple.sliding),
                                   tuple.tapping->label);
}

FeatureVector statistical_features(const TrialTuple& tuple, bool full36) {
    check_tuple(tuple);
    return statistical_from_digests(digest_record(*tuple.tapping),
                                    digest_record(*tuple.indentation),
                                    digest_record(*tuple.sliding),
                                    tuple.tapping->label, full36);
}

void FeatureBuilder::add(const TrialRecord& rec) {
    Tuple& tuple = tuples_[{rec.label, rec.trial_index}];
    auto slot = [&]() -> std::optional<RecordDigest>& {
        switch (rec.action) {
            case ActionKind::Tapping: return tuple.tap;
            case ActionKind::Indentation: return tuple.indent;
            case ActionKind::Sliding: return tuple.slide;
        }
        throw DataError("unhandled action kind");
    };
    auto& s = slot();
    if (s.has_value())
        throw DataError("duplicate record for object " +
                        std::to_string(rec.label) + " trial " +
                        std::to_string(rec.trial_index) + " action " +
                        action_name(rec.action));
    s = digest_record(rec);
}

int FeatureBuilder::complete_tuples() const {
    int n = 0;
    for (const auto& [key, t] : tuples_)
        if (t.tap && t.indent && t.slide) ++n;
    return n;
}

int FeatureBuilder::incomplete_tuples() const {
    return static_cast<int>(tuples_.size()) - complete_tuples();
}

FeatureMatrix FeatureBuilder::build(Schema schema) const {
    if (schema == Schema::CSSF)
        throw DataError("CSSF derives from SF via cssf_features()");
    std::vector<FeatureVector> rows;
    for (const auto& [key, t] : tuples_) {
        if (!(t.tap && t.indent && t.slide)) continue;
        if (schema == Schema::MP)
            rows.push_back(mechanical_from_digests(*t.tap, *t.indent, *t.slide,
                                                   key.first));
        else
            rows.push_back(statistical_from_digests(*t.tap, *t.indent, *t.slide,
                                                    key.first,
                                                    schema == Schema::SF36));
    }
    if (rows.empty()) throw DataError("no complete tuples to build features from");

    FeatureMatrix m;
    m.schema = schema;
    m.names = rows.front().names;
    m.values.resize(static_cast<Eigen::Index>(rows.size()),
                    rows.front().values.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        m.values.row(static_cast<Eigen::Index>(i)) = rows[i].values.transpose();
        m.labels.push_back(rows[i].label);
    }
    m.validate();
    return m;
}

std::vector<RankedFeature> chi_square_rank(const FeatureMatrix& m) {
    m.validate();
    std::map<int, int> class_counts;
    for (int l : m.labels) ++class_counts[l];
    if (class_counts.size() < 2)
        throw DataError("chi-square ranking needs at least 2 classes");
    for (const auto& [label, count] : class_counts)
        if (count < 2)
            throw DataError("chi-square ranking needs >= 2 rows per class");

    std::map<int, int> class_of;
    {
        int idx = 0;
        for (const auto& [label, count] : class_counts) class_of[label] = idx++;
    }
    const int n_classes = static_cast<int>(class_counts.size());
    const Eigen::Index n = m.rows();
    constexpr int kBins = 10;

    std::vector<RankedFeature> ranked;
    for (Eigen::Index col = 0; col < m.cols(); ++col) {
        // Equal-frequency bin edges; binning is rank-based, so it is
        // invariant under strictly monotone transforms.
        std::vector<double> sorted(m.values.col(col).data(),
                                   m.values.col(col).data() + n);
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> edges;
        for (int b = 1; b < kBins; ++b)
            edges.push_back(sorted[static_cast<std::size_t>(
                b * n / kBins)]);

        Eigen::MatrixXd observed = Eigen::MatrixXd::Zero(kBins, n_classes);
        for (Eigen::Index r = 0; r < n; ++r) {
            const double v = m.values(r, col);
            const int bin = static_cast<int>(
                std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
            observed(bin, class_of[m.labels[static_cast<std::size_t>(r)]]) += 1.0;
        }

        const Eigen::VectorXd row_tot = observed.rowwise().sum();
        const Eigen::VectorXd col_tot = observed.colwise().sum();
        double chi2 = 0;
        for (int b = 0; b < kBins; ++b)
            for (int c = 0; c < n_classes; ++c) {
                const double expected =
                    row_tot(b) * col_tot(c) / static_cast<double>(n);
                if (expected > 0)
                    chi2 += std::pow(observed(b, c) - expected, 2) / expected;
            }
        ranked.push_back({m.names[static_cast<std::size_t>(col)],
                          static_cast<int>(col), chi2});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedFeature& a, const RankedFeature& b) {
                         return a.score > b.score;
                     });
    return ranked;
}

const std::vector<std::string>& cssf_fixed_names() {
    static const std::vector<std::string> names = {
        "tap_peak", "slide_fpar_mean", "indent_fmag_std", "indent_fperp_mean"};
    return names;
}

FeatureMatrix cssf_features(const FeatureMatrix& sf, bool fixed_selection) {
    if (sf.cols() < 4)
        throw DataError("CSSF selection needs at least 4 features");
    std::vector<int> columns;
    if (fixed_selection) {
        for (const auto& name : cssf_fixed_names()) {
            const int c = sf.column_index(name);
            if (c < 0) throw DataError("fixed CSSF feature missing: " + name);
            columns.push_back(c);
        }
    } else {
        const auto ranked = chi_square_rank(sf);
        for (int i = 0; i < 4; ++i) columns.push_back(ranked[static_cast<std::size_t>(i)].column);
    }
    return sf.select(columns, Schema::CSSF);
}

void save_feature_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
    m.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string());
    for (const auto& name : m.names) out << name << ',';
    out << "label\n";
    char buf[40];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", m.values(r, c));
            out << buf << ',';
        }
        out << m.labels[static_cast<std::size_t>(r)] << '\n';
    }
    if (!out) throw DataError("failed writing " + path.string());
}

FeatureMatrix load_feature_csv(const std::filesystem::path& path, Schema schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty feature CSV " + path.string());

    FeatureMatrix m;
    m.schema = schema;
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) m.names.push_back(cell);
    if (m.names.empty() || m.names.back() != "label")
        throw DataError("feature CSV must end with a label column");
    m.names.pop_back();

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != m.names.size() + 1)
            throw DataError("feature CSV row width mismatch in " + path.string());
        m.labels.push_back(static_cast<int>(std::llround(row.back())));
        row.pop_back();
        rows.push_back(std::move(row));
    }
    m.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(m.names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rows[r][c];
    m.validate();
    return m;
}

}  // namespace haptest
