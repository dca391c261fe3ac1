#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crowddyn/dynamics.hpp"
#include "crowddyn/reduced_model.hpp"
#include "crowddyn/simulate.hpp"
#include "crowddyn/stats.hpp"

namespace crowddyn {

/// One observation of the long-format trial table. A trial is a
/// (dataset_id, group_id, task_id) triple; round 0 is the independent
/// estimate and the highest round a subject appears in is their final one.
struct ObservationRow {
    std::string dataset_id;
    Condition condition = Condition::Discussion;
    std::string group_id;
    std::string task_id;
    std::string subject_id;
    long round = 0;
    double estimate = 0.0;
    double truth = 0.0;
    std::optional<long> messages_sent;
};

struct TrialDataset {
    std::vector<ObservationRow> rows;
};

/// Parses and validates the canonical CSV (header required, column order
/// free, extra columns ignored, messages_sent may be blank). Throws
/// SchemaError, ParseError (with the line number) and InvariantError.
TrialDataset load_csv(std::istream& input);
TrialDataset load_csv_file(const std::string& path);

struct TrialKey {
    std::string dataset_id;
    std::string group_id;
    std::string task_id;

    auto operator<=>(const TrialKey&) const = default;
};

struct SubjectMetrics {
    std::string subject_id;
    double pre_estimate = 0.0;
    double abs_error = 0.0;
    std::optional<long> messages_sent;
    std::optional<double> stubbornness;  // delphi only; revision round 0 -> 1
};

struct TrialMetrics {
    TrialKey key;
    Condition condition = Condition::Discussion;
    std::size_t n_subjects = 0;
    double truth = 0.0;
    double mu_pre = 0.0;
    double mu_post = 0.0;

    PhiSummary phi;
    Outcome outcome = Outcome::Unchanged;

    std::optional<double> gini_messages;     // discussion with counts; zeros included
    std::optional<bool> top_talker_toward;   // most talkative subject's direction

    std::vector<SubjectMetrics> subjects;
    std::vector<std::string> warnings;
};

std::vector<TrialMetrics> per_trial_metrics(const TrialDataset& dataset);

enum class ClusterMode { Auto, Group, None };

struct FitOptions {
    ClusterMode clusters = ClusterMode::Auto;
    std::size_t min_trials_per_fit = 10;
};

struct MajorityTableRow {
    std::string dataset;
    long trials = 0;
    long toward = 0;
    long away = 0;
    long split = 0;
};

struct Figure2Cell {
    std::string dataset;
    Condition condition = Condition::Discussion;
    BucketStats toward, away;
    long split_trials = 0;
    std::optional<ProportionTestResult> toward_vs_away;
};

struct TableA1Row {
    std::string dataset;
    Condition condition = Condition::Discussion;
    MajorityLabel majority = MajorityLabel::Toward;
    long trials = 0;
    long improved = 0;
    double prop_improved = 0.0;
    ProportionTestResult test;
};

struct CoefficientReport {
    std::string term;
    double estimate = 0.0;
    double standard_error = 0.0;
    double p_value = 1.0;
};

/// Logistic fit of the improvement outcome with per-task intercepts; the
/// reported terms are the substantive regressors (phi; or phi, gini and
/// their interaction).
struct RegressionCell {
    std::string dataset;
    std::optional<Condition> condition;  // absent for the interaction table
    bool fitted = false;
    std::string note;           // why a fit was skipped
    std::string cluster_note;   // what the covariance clustered on
    long n_trials = 0;
    long task_effects = 0;
    std::vector<CoefficientReport> terms;
    double log_likelihood = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    double deviance = 0.0;
};

struct Figure3Cell {
    std::string dataset;
    BucketStats top_toward, top_away;
    std::optional<ProportionTestResult> toward_vs_away;
};

struct TalkAccuracyCell {
    std::string dataset;
    long n_subjects = 0;
    double correlation = 0.0;
    double p_value = 1.0;
    std::string method;
};

struct AnalysisReport {
    long total_trials = 0;
    std::vector<MajorityTableRow> majority_table;
    std::vector<Figure2Cell> figure2;
    std::vector<TableA1Row> table_a1;
    std::vector<RegressionCell> table_a2;
    std::vector<RegressionCell> table_a3;
    std::vector<Figure3Cell> figure3;
    std::vector<TalkAccuracyCell> talk_accuracy;
    std::vector<std::string> notices;
};

AnalysisReport aggregate_report(const std::vector<TrialMetrics>& metrics,
                                const FitOptions& options = {});

/// Deterministic JSON rendering with top-level keys majority_table, figure2,
/// tableA1, tableA2, tableA3, figure3, talk_accuracy.
std::string report_to_json(const AnalysisReport& report);

/// Writes simulated trials in the canonical CSV schema (one row per subject
/// per round; every intermediate delphi round included). Each trial becomes
/// its own group; estimates are printed with shortest round-trip precision.
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                      const std::string& dataset_id);
std::string trials_to_csv(const std::vector<TrialRecord>& records,
                          const std::string& dataset_id);

/// Tidy one-row-per-level table for sweep output.
std::string sweep_table_csv(SweepAxis axis, const std::vector<double>& levels,
                            const std::vector<EnsembleReport>& reports);

}  // namespace crowddyn
