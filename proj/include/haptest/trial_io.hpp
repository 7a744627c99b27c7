#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "haptest/exploration.hpp"

// Dataset layout: <dir>/<object>_<action>_<trial>.csv plus one meta.json per
// campaign. CSV columns, in order: t, x_perp_true, x_par_true, x_perp_meas,
// x_par_meas, f_perp_meas, f_par_true, xi_hat_0..4, theta_hat_0..2. Values
// are written with max_digits10 precision so a load reproduces the record
// exactly.

namespace haptest {

std::string trial_filename(int label, ActionKind kind, int trial_index);

void write_trial_csv(const TrialRecord& rec, std::ostream& out);
void write_trial_csv(const TrialRecord& rec, const std::filesystem::path& path);

/// Serializes a record to its CSV bytes; digests of these bytes are the
/// dataset determinism check.
std::string trial_csv_string(const TrialRecord& rec);

/// Reads series columns; label/action/trial/seed/psi_hat come from meta.json.
TrialRecord read_trial_csv(const std::filesystem::path& path);

/// Writes trial CSVs incrementally and the campaign meta.json on finalize().
class CampaignWriter {
public:
    CampaignWriter(std::filesystem::path dir, const Catalog& catalog,
                   std::uint64_t seed, std::uint64_t config_digest);
    CampaignWriter(const CampaignWriter&) = delete;

    void add(const TrialRecord& rec);
    void finalize();

    const std::filesystem::path& dir() const { return dir_; }

private:
    struct Entry {
        std::string file;
        int label;
        ActionKind action;
        int trial_index;
        std::uint64_t seed;
        bool has_psi;
        double psi_hat;
    };
    std::filesystem::path dir_;
    Catalog catalog_;
    std::uint64_t seed_;
    std::uint64_t config_digest_;
    std::vector<Entry> entries_;
    bool finalized_ = false;
};

/// Streams every trial of a persisted campaign in meta.json order.
void for_each_trial(const std::filesystem::path& dir,
                    const std::function<void(TrialRecord&&)>& fn);

/// Catalog recorded in a campaign's meta.json.
Catalog read_campaign_catalog(const std::filesystem::path& dir);

/// Loads a catalog from a standalone JSON file (array of surface objects with
/// keys label, f0, stiffness, viscosity, friction, restitution).
Catalog read_catalog_json(const std::filesystem::path& path);
void write_catalog_json(const Catalog& catalog, const std::filesystem::path& path);

}  // namespace haptest
