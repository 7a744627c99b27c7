#include "haptest/trial_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "haptest/errors.hpp"

namespace haptest {

namespace {

using nlohmann::json;

constexpr const char* kCsvHeader =
    "t,x_perp_true,x_par_true,x_perp_meas,x_par_meas,f_perp_meas,f_par_true,"
    "xi_hat_0,xi_hat_1,xi_hat_2,xi_hat_3,xi_hat_4,"
    "theta_hat_0,theta_hat_1,theta_hat_2";

void append_value(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

json surface_to_json(const SurfaceSpec& s) {
    return json{{"label", s.label},         {"f0", s.f0},
                {"stiffness", s.stiffness}, {"viscosity", s.viscosity},
                {"friction", s.friction},   {"restitution", s.restitution}};
}

SurfaceSpec surface_from_json(const json& j) {
    SurfaceSpec s;
    s.label = j.at("label").get<int>();
    s.f0 = j.at("f0").get<double>();
    s.stiffness = j.at("stiffness").get<double>();
    s.viscosity = j.at("viscosity").get<double>();
    s.friction = j.at("friction").get<double>();
    s.restitution = j.at("restitution").get<double>();
    return s;
}

json load_meta(const std::filesystem::path& dir) {
    const auto meta_path = dir / "meta.json";
    std::ifstream in(meta_path);
    if (!in) throw DataError("cannot open " + meta_path.string());
    json meta;
    try {
        in >> meta;
    } catch (const json::exception& e) {
        throw DataError("malformed meta.json in " + dir.string() + ": " + e.what());
    }
    return meta;
}

}  // namespace

std::string trial_filename(int label, ActionKind kind, int trial_index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%02d_%s_%03d.csv", label, action_name(kind),
                  trial_index);
    return buf;
}

std::string trial_csv_string(const TrialRecord& rec) {
    std::string out;
    out.reserve(rec.size() * 170 + 200);
    out += kCsvHeader;
    out += '\n';
    for (std::size_t i = 0; i < rec.size(); ++i) {
        append_value(out, rec.t[i]);
        for (const auto* col :
             {&rec.x_perp_true, &rec.x_par_true, &rec.x_perp_meas,
              &rec.x_par_meas, &rec.f_perp_meas, &rec.f_par_true}) {
            out += ',';
            append_value(out, (*col)[i]);
        }
        for (const auto& col : rec.xi_hat) {
            out += ',';
            append_value(out, col[i]);
        }
        for (const auto& col : rec.theta_hat) {
            out += ',';
            append_value(out, col[i]);
        }
        out += '\n';
    }
    return out;
}

void write_trial_csv(const TrialRecord& rec, std::ostream& out) {
    out << trial_csv_string(rec);
}

void write_trial_csv(const TrialRecord& rec, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    write_trial_csv(rec, out);
    if (!out) throw DataError("failed writing " + path.string());
}

TrialRecord read_trial_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV " + path.string());
    if (line != kCsvHeader)
        throw DataError("unexpected CSV header in " + path.string());

    TrialRecord rec;
    std::vector<double> row(15);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const char* p = line.c_str();
        char* end = nullptr;
        for (int c = 0; c < 15; ++c) {
            row[c] = std::strtod(p, &end);
            if (end == p)
                throw DataError("malformed CSV row in " + path.string());
            p = end;
            if (c < 14) {
                if (*p != ',')
                    throw DataError("expected 15 columns in " + path.string());
                ++p;
            }
        }
        rec.t.push_back(row[0]);
        rec.x_perp_true.push_back(row[1]);
        rec.x_par_true.push_back(row[2]);
        rec.x_perp_meas.push_back(row[3]);
        rec.x_par_meas.push_back(row[4]);
        rec.f_perp_meas.push_back(row[5]);
        rec.f_par_true.push_back(row[6]);
        for (int i = 0; i < 5; ++i) rec.xi_hat[i].push_back(row[7 + i]);
        for (int i = 0; i < 3; ++i) rec.theta_hat[i].push_back(row[12 + i]);
    }
    return rec;
}

CampaignWriter::CampaignWriter(std::filesystem::path dir, const Catalog& catalog,
                               std::uint64_t seed, std::uint64_t config_digest)
    : dir_(std::move(dir)), catalog_(catalog), seed_(seed),
      config_digest_(config_digest) {
    std::filesystem::create_directories(dir_);
}

void CampaignWriter::add(const TrialRecord& rec) {
    const std::string file = trial_filename(rec.label, rec.action, rec.trial_index);
    write_trial_csv(rec, dir_ / file);
    entries_.push_back({file, rec.label, rec.action, rec.trial_index, rec.seed,
                        rec.psi_hat.has_value(), rec.psi_hat.value_or(0.0)});
}

void CampaignWriter::finalize() {
    if (finalized_) return;
    json meta;
    meta["schema_version"] = 1;
    meta["seed"] = seed_;
    char digest[24];
    std::snprintf(digest, sizeof digest, "%016" PRIx64, config_digest_);
    meta["config_digest"] = digest;
    meta["catalog"] = json::array();
    for (const auto& s : catalog_.objects)
        meta["catalog"].push_back(surface_to_json(s));
    meta["trials"] = json::array();
    for (const auto& e : entries_) {
        json t{{"file", e.file},
               {"label", e.label},
               {"action", action_name(e.action)},
               {"trial", e.trial_index},
               {"seed", e.seed}};
        if (e.has_psi) t["psi_hat"] = e.psi_hat;
        meta["trials"].push_back(t);
    }
    const auto meta_path = dir_ / "meta.json";
    std::ofstream out(meta_path, std::ios::binary);
    if (!out) throw DataError("cannot open " + meta_path.string());
    out << meta.dump(2) << '\n';
    finalized_ = true;
}

void for_each_trial(const std::filesystem::path& dir,
                    const std::function<void(TrialRecord&&)>& fn) {
    const json meta = load_meta(dir);
    for (const auto& t : meta.at("trials")) {
        TrialRecord rec = read_trial_csv(dir / t.at("file").get<std::string>());
        rec.label = t.at("label").get<int>();
        rec.action = action_from_name(t.at("action").get<std::string>());
        rec.trial_index = t.at("trial").get<int>();
        rec.seed = t.at("seed").get<std::uint64_t>();
        if (t.contains("psi_hat")) rec.psi_hat = t.at("psi_hat").get<double>();
        fn(std::move(rec));
    }
}

Catalog read_campaign_catalog(const std::filesystem::path& dir) {
    const json meta = load_meta(dir);
    Catalog c;
    for (const auto& j : meta.at("catalog"))
        c.objects.push_back(surface_from_json(j));
    c.validate();
    return c;
}

Catalog read_catalog_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open catalog file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("malformed catalog JSON: " + std::string(e.what()));
    }
    Catalog c;
    for (const auto& item : j) c.objects.push_back(surface_from_json(item));
    c.validate();
    return c;
}

void write_catalog_json(const Catalog& catalog,
                        const std::filesystem::path& path) {
    json j = json::array();
    for (const auto& s : catalog.objects) j.push_back(surface_to_json(s));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace haptest
