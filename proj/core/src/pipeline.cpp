#include "crowddyn/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "crowddyn/error.hpp"

#include <json.hpp>

namespace crowddyn {

namespace {

const char* const kColumns[] = {"dataset_id", "condition", "group_id", "task_id",
                                "subject_id", "round",     "estimate", "truth",
                                "messages_sent"};

std::string trim(std::string s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && is_space(s.back())) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && is_space(s[start])) ++start;
    return s.substr(start);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(trim(current));
    return fields;
}

double parse_double(const std::string& field, const char* what, std::size_t line) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw ParseError("line " + std::to_string(line) + ": bad " + what + " '" + field + "'");
    }
    return value;
}

long parse_count(const std::string& field, const char* what, std::size_t line) {
    long value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || value < 0) {
        throw ParseError("line " + std::to_string(line) + ": bad " + what + " '" + field + "'");
    }
    return value;
}

std::string key_name(const TrialKey& key) {
    return key.dataset_id + "/" + key.group_id + "/" + key.task_id;
}

/// Shared structural validation for loaded and hand-built datasets.
void validate_dataset(const TrialDataset& dataset) {
    if (dataset.rows.empty()) throw InvariantError("dataset contains no trials");

    std::map<std::pair<std::string, std::string>, double> task_truth;
    std::map<TrialKey, Condition> trial_condition;
    std::set<std::tuple<std::string, std::string, std::string, std::string, long>> seen;
    std::set<std::tuple<std::string, std::string, std::string, std::string>> subjects;
    std::set<std::tuple<std::string, std::string, std::string, std::string>> with_round0;

    for (const auto& row : dataset.rows) {
        const auto truth_key = std::make_pair(row.dataset_id, row.task_id);
        const auto [truth_it, truth_new] = task_truth.emplace(truth_key, row.truth);
        if (!truth_new && truth_it->second != row.truth) {
            throw InvariantError("truth varies within task '" + row.task_id +
                                 "' of dataset '" + row.dataset_id + "'");
        }

        const TrialKey key{row.dataset_id, row.group_id, row.task_id};
        const auto [cond_it, cond_new] = trial_condition.emplace(key, row.condition);
        if (!cond_new && cond_it->second != row.condition) {
            throw InvariantError("condition varies within trial " + key_name(key));
        }

        if (!seen.emplace(row.dataset_id, row.group_id, row.task_id, row.subject_id, row.round)
                 .second) {
            throw InvariantError("duplicate round " + std::to_string(row.round) +
                                 " for subject '" + row.subject_id + "' in trial " +
                                 key_name(key));
        }
        subjects.emplace(row.dataset_id, row.group_id, row.task_id, row.subject_id);
        if (row.round == 0) {
            with_round0.emplace(row.dataset_id, row.group_id, row.task_id, row.subject_id);
        }
    }
    if (subjects.size() != with_round0.size()) {
        for (const auto& s : subjects) {
            if (!with_round0.count(s)) {
                throw InvariantError("subject '" + std::get<3>(s) +
                                     "' has no round-0 estimate in trial " +
                                     std::get<0>(s) + "/" + std::get<1>(s) + "/" +
                                     std::get<2>(s));
            }
        }
    }
}

}  // namespace

TrialDataset load_csv(std::istream& input) {
    std::string line;
    if (!std::getline(input, line)) throw SchemaError("missing CSV header");
    if (line.size() >= 3 && line.compare(0, 3, "\xef\xbb\xbf") == 0) line.erase(0, 3);

    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column.emplace(header[i], i);

    std::map<std::string, std::size_t> index;
    for (const char* name : kColumns) {
        const auto it = column.find(name);
        if (it == column.end()) {
            if (std::string(name) == "messages_sent") continue;  // optional column
            throw SchemaError(std::string("missing required column '") + name + "'");
        }
        index[name] = it->second;
    }
    const bool has_messages = index.count("messages_sent") > 0;

    TrialDataset dataset;
    std::size_t line_no = 1;
    while (std::getline(input, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        ObservationRow row;
        row.dataset_id = fields[index["dataset_id"]];
        const std::string& cond = fields[index["condition"]];
        if (cond == "delphi") {
            row.condition = Condition::Delphi;
        } else if (cond == "discussion") {
            row.condition = Condition::Discussion;
        } else {
            throw ParseError("line " + std::to_string(line_no) + ": unknown condition '" +
                             cond + "'");
        }
        row.group_id = fields[index["group_id"]];
        row.task_id = fields[index["task_id"]];
        row.subject_id = fields[index["subject_id"]];
        row.round = parse_count(fields[index["round"]], "round", line_no);
        row.estimate = parse_double(fields[index["estimate"]], "estimate", line_no);
        row.truth = parse_double(fields[index["truth"]], "truth", line_no);
        if (has_messages) {
            const std::string& m = fields[index["messages_sent"]];
            if (!m.empty()) {
                row.messages_sent = parse_count(m, "messages_sent", line_no);
            }
        }
        dataset.rows.push_back(std::move(row));
    }

    validate_dataset(dataset);
    return dataset;
}

TrialDataset load_csv_file(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw ParseError("cannot open '" + path + "'");
    return load_csv(file);
}

namespace {

struct SubjectRows {
    std::map<long, double> estimates;  // round -> estimate
    std::optional<long> messages;
};

bool toward_truth(double estimate, double mean, double truth) {
    if (truth == mean || estimate == mean) return false;
    return (estimate > mean) == (truth > mean);
}

}  // namespace

std::vector<TrialMetrics> per_trial_metrics(const TrialDataset& dataset) {
    validate_dataset(dataset);

    std::map<TrialKey, std::map<std::string, SubjectRows>> trials;
    std::map<TrialKey, std::pair<Condition, double>> meta;
    for (const auto& row : dataset.rows) {
        const TrialKey key{row.dataset_id, row.group_id, row.task_id};
        auto& subject = trials[key][row.subject_id];
        subject.estimates.emplace(row.round, row.estimate);
        if (row.messages_sent && !subject.messages) subject.messages = row.messages_sent;
        meta.emplace(key, std::make_pair(row.condition, row.truth));
    }

    std::vector<TrialMetrics> all;
    all.reserve(trials.size());
    for (const auto& [key, subjects] : trials) {
        if (subjects.size() < 2) {
            throw InvariantError("trial " + key_name(key) + " has fewer than 2 subjects");
        }
        TrialMetrics metrics;
        metrics.key = key;
        metrics.condition = meta[key].first;
        metrics.truth = meta[key].second;
        metrics.n_subjects = subjects.size();

        long max_round = 0;
        for (const auto& [id, sub] : subjects) {
            max_round = std::max(max_round, sub.estimates.rbegin()->first);
        }

        std::vector<double> pre, post;
        pre.reserve(subjects.size());
        post.reserve(subjects.size());
        for (const auto& [id, sub] : subjects) {
            pre.push_back(sub.estimates.at(0));
            const auto last = sub.estimates.rbegin();
            if (last->first != max_round) {
                metrics.warnings.push_back("subject '" + id + "' missing round " +
                                           std::to_string(max_round) + "; using round " +
                                           std::to_string(last->first));
            }
            post.push_back(last->second);
        }

        double pre_sum = 0.0, post_sum = 0.0;
        for (double x : pre) pre_sum += x;
        for (double x : post) post_sum += x;
        metrics.mu_pre = pre_sum / double(pre.size());
        metrics.mu_post = post_sum / double(post.size());

        metrics.phi = phi(pre, metrics.truth);
        metrics.outcome = improvement(pre, post, metrics.truth);

        std::size_t i = 0;
        bool all_messages = true;
        for (const auto& [id, sub] : subjects) {
            SubjectMetrics sm;
            sm.subject_id = id;
            sm.pre_estimate = pre[i];
            sm.abs_error = std::abs(pre[i] - metrics.truth);
            sm.messages_sent = sub.messages;
            if (!sub.messages) all_messages = false;
            if (metrics.condition == Condition::Delphi) {
                // Stubbornness from the first revision against the peers'
                // round-0 mean (what the subject was shown).
                const auto next = sub.estimates.upper_bound(0);
                if (next != sub.estimates.end()) {
                    const double peer_mean =
                        (pre_sum - pre[i]) / double(subjects.size() - 1);
                    sm.stubbornness = empirical_stubbornness(pre[i], next->second, peer_mean);
                }
            }
            metrics.subjects.push_back(std::move(sm));
            ++i;
        }

        if (metrics.condition == Condition::Discussion && all_messages) {
            std::vector<double> counts;
            counts.reserve(metrics.subjects.size());
            for (const auto& sm : metrics.subjects) counts.push_back(double(*sm.messages_sent));
            try {
                metrics.gini_messages = gini(counts);
            } catch (const AllZero&) {
                metrics.warnings.push_back("all message counts are zero; gini undefined");
            }
            // Most talkative subject; ties already resolve to the lowest
            // subject_id because subjects iterate in sorted order.
            std::size_t top = 0;
            for (std::size_t j = 1; j < counts.size(); ++j) {
                if (counts[j] > counts[top]) top = j;
            }
            const double top_estimate = metrics.subjects[top].pre_estimate;
            if (metrics.truth != metrics.mu_pre && top_estimate != metrics.mu_pre) {
                metrics.top_talker_toward =
                    toward_truth(top_estimate, metrics.mu_pre, metrics.truth);
            }
        }

        all.push_back(std::move(metrics));
    }
    return all;
}

namespace {

std::vector<const TrialMetrics*> select(const std::vector<TrialMetrics>& metrics,
                                        const std::string& dataset,
                                        std::optional<Condition> condition) {
    std::vector<const TrialMetrics*> out;
    for (const auto& m : metrics) {
        if (m.key.dataset_id != dataset) continue;
        if (condition && m.condition != *condition) continue;
        out.push_back(&m);
    }
    return out;
}

BucketStats bucket_of(const std::vector<const TrialMetrics*>& trials, MajorityLabel label) {
    BucketStats stats;
    for (const auto* m : trials) {
        if (m->phi.label != label) continue;
        ++stats.trials;
        if (m->outcome == Outcome::Improved) ++stats.improved;
    }
    if (stats.trials > 0) {
        stats.proportion = double(stats.improved) / double(stats.trials);
        stats.vs_half = proportion_test(stats.improved, stats.trials, 0.5);
    }
    return stats;
}

double coefficient_p_value(double estimate, double se) {
    if (se <= 0.0) return estimate == 0.0 ? 1.0 : 0.0;
    const double z = std::abs(estimate / se);
    return std::erfc(z / std::sqrt(2.0));
}

std::optional<std::vector<int>> cluster_labels(const std::vector<const TrialMetrics*>& trials,
                                               ClusterMode mode, std::string& note) {
    if (mode == ClusterMode::None) {
        note = "no clustering";
        return std::nullopt;
    }
    std::map<std::string, int> label_of;
    std::vector<int> labels;
    labels.reserve(trials.size());
    std::map<std::string, int> group_trials;
    for (const auto* m : trials) {
        const std::string group = m->key.dataset_id + "/" + m->key.group_id;
        labels.push_back(label_of.emplace(group, int(label_of.size())).first->second);
        ++group_trials[group];
    }
    bool repeated = false;
    for (const auto& [group, count] : group_trials) {
        if (count > 1) {
            repeated = true;
            break;
        }
    }
    if (mode == ClusterMode::Auto && !repeated) {
        note = "no clustering (no group answered more than one task)";
        return std::nullopt;
    }
    note = "cluster-robust (CR0, G/(G-1)) on group_id, G=" + std::to_string(label_of.size());
    return labels;
}

/// Fits improvement ~ per-task intercepts + extra regressors and reports the
/// extra terms. Returns an unfitted cell with a note on any failure.
RegressionCell fit_cell(const std::vector<const TrialMetrics*>& trials,
                        const std::vector<std::string>& term_names,
                        const std::vector<std::vector<double>>& term_values,
                        const FitOptions& options, std::vector<std::string>& notices,
                        const std::string& label) {
    RegressionCell cell;
    cell.n_trials = long(trials.size());
    if (trials.size() < options.min_trials_per_fit) {
        cell.note = "skipped: fewer than " + std::to_string(options.min_trials_per_fit) +
                    " trials";
        notices.push_back(label + ": " + cell.note);
        return cell;
    }

    std::map<std::string, std::size_t> task_index;
    for (const auto* m : trials) {
        task_index.emplace(m->key.task_id, task_index.size());
    }
    const std::size_t n_tasks = task_index.size();
    const std::size_t k = n_tasks + term_names.size();
    cell.task_effects = long(n_tasks);

    std::vector<std::vector<double>> design(trials.size(), std::vector<double>(k, 0.0));
    std::vector<int> outcomes(trials.size(), 0);
    for (std::size_t i = 0; i < trials.size(); ++i) {
        design[i][task_index[trials[i]->key.task_id]] = 1.0;
        for (std::size_t t = 0; t < term_names.size(); ++t) {
            design[i][n_tasks + t] = term_values[t][i];
        }
        outcomes[i] = trials[i]->outcome == Outcome::Improved ? 1 : 0;
    }

    const auto labels = cluster_labels(trials, options.clusters, cell.cluster_note);
    try {
        const LogisticFit fit =
            logistic_fit(design, outcomes, labels ? &*labels : nullptr);
        cell.fitted = true;
        cell.log_likelihood = fit.log_likelihood;
        cell.aic = fit.aic();
        cell.bic = fit.bic();
        cell.deviance = fit.deviance();
        for (std::size_t t = 0; t < term_names.size(); ++t) {
            CoefficientReport report;
            report.term = term_names[t];
            report.estimate = fit.coefficients[n_tasks + t];
            report.standard_error = fit.standard_errors[n_tasks + t];
            report.p_value = coefficient_p_value(report.estimate, report.standard_error);
            cell.terms.push_back(report);
        }
    } catch (const Error& e) {
        cell.note = std::string("skipped: ") + e.what();
        notices.push_back(label + ": " + cell.note);
    }
    return cell;
}

}  // namespace

AnalysisReport aggregate_report(const std::vector<TrialMetrics>& metrics,
                                const FitOptions& options) {
    if (metrics.empty()) throw EmptyInput("aggregate_report needs at least one trial");

    AnalysisReport report;
    report.total_trials = long(metrics.size());

    std::vector<std::string> datasets;
    for (const auto& m : metrics) datasets.push_back(m.key.dataset_id);
    std::sort(datasets.begin(), datasets.end());
    datasets.erase(std::unique(datasets.begin(), datasets.end()), datasets.end());

    constexpr Condition kConditions[] = {Condition::Delphi, Condition::Discussion};

    for (const auto& dataset : datasets) {
        const auto trials = select(metrics, dataset, std::nullopt);
        MajorityTableRow row;
        row.dataset = dataset;
        row.trials = long(trials.size());
        for (const auto* m : trials) {
            switch (m->phi.label) {
                case MajorityLabel::Toward: ++row.toward; break;
                case MajorityLabel::Away: ++row.away; break;
                case MajorityLabel::Split: ++row.split; break;
            }
        }
        report.majority_table.push_back(row);
    }

    for (const auto& dataset : datasets) {
        for (const Condition condition : kConditions) {
            const auto trials = select(metrics, dataset, condition);
            if (trials.empty()) continue;
            Figure2Cell cell;
            cell.dataset = dataset;
            cell.condition = condition;
            cell.toward = bucket_of(trials, MajorityLabel::Toward);
            cell.away = bucket_of(trials, MajorityLabel::Away);
            for (const auto* m : trials) {
                if (m->phi.label == MajorityLabel::Split) ++cell.split_trials;
            }
            if (cell.toward.trials > 0 && cell.away.trials > 0) {
                cell.toward_vs_away = proportion_test_2(cell.toward.improved, cell.toward.trials,
                                                        cell.away.improved, cell.away.trials);
            }
            report.figure2.push_back(std::move(cell));
        }
    }

    for (const MajorityLabel majority : {MajorityLabel::Away, MajorityLabel::Toward}) {
        for (const Condition condition : kConditions) {
            for (const auto& dataset : datasets) {
                const auto trials = select(metrics, dataset, condition);
                const auto bucket = bucket_of(trials, majority);
                if (bucket.trials == 0) continue;
                TableA1Row row;
                row.dataset = dataset;
                row.condition = condition;
                row.majority = majority;
                row.trials = bucket.trials;
                row.improved = bucket.improved;
                row.prop_improved = bucket.proportion;
                row.test = *bucket.vs_half;
                report.table_a1.push_back(std::move(row));
            }
        }
    }

    for (const auto& dataset : datasets) {
        for (const Condition condition : kConditions) {
            const auto trials = select(metrics, dataset, condition);
            if (trials.empty()) continue;
            std::vector<double> phis;
            phis.reserve(trials.size());
            for (const auto* m : trials) phis.push_back(m->phi.phi);
            auto cell = fit_cell(trials, {"phi"}, {phis}, options, report.notices,
                                 "tableA2 " + dataset + "/" + to_string(condition));
            cell.dataset = dataset;
            cell.condition = condition;
            report.table_a2.push_back(std::move(cell));
        }
    }

    for (const auto& dataset : datasets) {
        auto trials = select(metrics, dataset, Condition::Discussion);
        std::erase_if(trials, [](const TrialMetrics* m) { return !m->gini_messages; });
        if (trials.empty()) continue;
        std::vector<double> phis, ginis, interact;
        for (const auto* m : trials) {
            phis.push_back(m->phi.phi);
            ginis.push_back(*m->gini_messages);
            interact.push_back(m->phi.phi * *m->gini_messages);
        }
        auto cell = fit_cell(trials, {"phi", "gini", "phi_x_gini"}, {phis, ginis, interact},
                             options, report.notices, "tableA3 " + dataset);
        cell.dataset = dataset;
        report.table_a3.push_back(std::move(cell));
    }

    for (const auto& dataset : datasets) {
        auto trials = select(metrics, dataset, Condition::Discussion);
        std::erase_if(trials, [](const TrialMetrics* m) { return !m->top_talker_toward; });
        if (trials.empty()) continue;
        Figure3Cell cell;
        cell.dataset = dataset;
        for (const auto* m : trials) {
            BucketStats& bucket = *m->top_talker_toward ? cell.top_toward : cell.top_away;
            ++bucket.trials;
            if (m->outcome == Outcome::Improved) ++bucket.improved;
        }
        for (BucketStats* bucket : {&cell.top_toward, &cell.top_away}) {
            if (bucket->trials > 0) {
                bucket->proportion = double(bucket->improved) / double(bucket->trials);
                bucket->vs_half = proportion_test(bucket->improved, bucket->trials, 0.5);
            }
        }
        if (cell.top_toward.trials > 0 && cell.top_away.trials > 0) {
            cell.toward_vs_away =
                proportion_test_2(cell.top_toward.improved, cell.top_toward.trials,
                                  cell.top_away.improved, cell.top_away.trials);
        }
        report.figure3.push_back(std::move(cell));
    }

    for (const auto& dataset : datasets) {
        // Error quartiles per task, talkativeness quartiles per dataset,
        // taken over discussion subjects with message counts.
        std::map<std::string, std::vector<std::pair<double, double>>> per_task;  // error, msgs
        for (const auto& m : metrics) {
            if (m.key.dataset_id != dataset || m.condition != Condition::Discussion) continue;
            for (const auto& s : m.subjects) {
                if (!s.messages_sent) continue;
                per_task[m.key.task_id].emplace_back(s.abs_error, double(*s.messages_sent));
            }
        }
        std::vector<double> error_bins, message_counts;
        for (const auto& [task, subjects] : per_task) {
            if (subjects.size() < 4) {
                report.notices.push_back("talk_accuracy " + dataset + ": task '" + task +
                                         "' has fewer than 4 subjects; excluded");
                continue;
            }
            std::vector<double> errors;
            errors.reserve(subjects.size());
            for (const auto& [error, msgs] : subjects) errors.push_back(error);
            const auto bins = quartile_bins(errors);
            for (std::size_t i = 0; i < subjects.size(); ++i) {
                error_bins.push_back(double(bins[i]));
                message_counts.push_back(subjects[i].second);
            }
        }
        if (error_bins.size() < 4) continue;

        TalkAccuracyCell cell;
        cell.dataset = dataset;
        cell.n_subjects = long(error_bins.size());
        cell.method =
            "pearson on quartile scores; fisher-z normal approximation; no cluster adjustment";
        try {
            const auto talk_bins = quartile_bins(message_counts);
            std::vector<double> talk(talk_bins.begin(), talk_bins.end());
            cell.correlation = correlation(error_bins, talk);
            const double n = double(error_bins.size());
            const double z = std::atanh(std::clamp(cell.correlation, -0.999999, 0.999999)) *
                             std::sqrt(n - 3.0);
            cell.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
            report.talk_accuracy.push_back(std::move(cell));
        } catch (const Error& e) {
            report.notices.push_back("talk_accuracy " + dataset + ": skipped: " + e.what());
        }
    }

    for (const auto& m : metrics) {
        for (const auto& warning : m.warnings) {
            report.notices.push_back(key_name(m.key) + ": " + warning);
        }
    }
    return report;
}

namespace {

nlohmann::ordered_json test_to_json(const ProportionTestResult& test) {
    nlohmann::ordered_json j;
    j["successes"] = test.successes;
    j["trials"] = test.trials;
    j["proportion"] = test.observed;
    j["reference"] = test.reference;
    j["p_value"] = test.p_value;
    j["method"] = to_string(test.method);
    return j;
}

nlohmann::ordered_json bucket_to_json(const BucketStats& bucket) {
    nlohmann::ordered_json j;
    j["trials"] = bucket.trials;
    j["improved"] = bucket.improved;
    j["proportion_improved"] = bucket.proportion;
    j["vs_half"] = bucket.vs_half ? test_to_json(*bucket.vs_half)
                                  : nlohmann::ordered_json(nullptr);
    return j;
}

nlohmann::ordered_json regression_to_json(const RegressionCell& cell) {
    nlohmann::ordered_json j;
    j["dataset"] = cell.dataset;
    if (cell.condition) j["condition"] = to_string(*cell.condition);
    j["n_trials"] = cell.n_trials;
    j["fitted"] = cell.fitted;
    if (!cell.fitted) {
        j["note"] = cell.note;
        return j;
    }
    j["task_effects"] = cell.task_effects;
    j["clusters"] = cell.cluster_note;
    auto terms = nlohmann::ordered_json::object();
    for (const auto& term : cell.terms) {
        terms[term.term] = {{"coefficient", term.estimate},
                            {"standard_error", term.standard_error},
                            {"p_value", term.p_value},
                            {"method", "wald z on cluster-aware covariance"}};
    }
    j["terms"] = std::move(terms);
    j["log_likelihood"] = cell.log_likelihood;
    j["aic"] = cell.aic;
    j["bic"] = cell.bic;
    j["deviance"] = cell.deviance;
    return j;
}

}  // namespace

std::string report_to_json(const AnalysisReport& report) {
    nlohmann::ordered_json j;
    j["total_trials"] = report.total_trials;

    auto majority = nlohmann::ordered_json::array();
    for (const auto& row : report.majority_table) {
        majority.push_back({{"dataset", row.dataset},
                            {"trials", row.trials},
                            {"toward", row.toward},
                            {"away", row.away},
                            {"split", row.split}});
    }
    j["majority_table"] = std::move(majority);

    auto figure2 = nlohmann::ordered_json::array();
    for (const auto& cell : report.figure2) {
        nlohmann::ordered_json c;
        c["dataset"] = cell.dataset;
        c["condition"] = to_string(cell.condition);
        c["toward"] = bucket_to_json(cell.toward);
        c["away"] = bucket_to_json(cell.away);
        c["split_trials"] = cell.split_trials;
        c["toward_vs_away"] = cell.toward_vs_away ? test_to_json(*cell.toward_vs_away)
                                                  : nlohmann::ordered_json(nullptr);
        figure2.push_back(std::move(c));
    }
    j["figure2"] = std::move(figure2);

    auto a1 = nlohmann::ordered_json::array();
    for (const auto& row : report.table_a1) {
        a1.push_back({{"majority", to_string(row.majority)},
                      {"condition", to_string(row.condition)},
                      {"dataset", row.dataset},
                      {"trials", row.trials},
                      {"improved", row.improved},
                      {"prop_improved", row.prop_improved},
                      {"p_value", row.test.p_value},
                      {"method", to_string(row.test.method)}});
    }
    j["tableA1"] = std::move(a1);

    auto a2 = nlohmann::ordered_json::array();
    for (const auto& cell : report.table_a2) a2.push_back(regression_to_json(cell));
    j["tableA2"] = std::move(a2);

    auto a3 = nlohmann::ordered_json::array();
    for (const auto& cell : report.table_a3) a3.push_back(regression_to_json(cell));
    j["tableA3"] = std::move(a3);

    auto figure3 = nlohmann::ordered_json::array();
    for (const auto& cell : report.figure3) {
        nlohmann::ordered_json c;
        c["dataset"] = cell.dataset;
        c["top_talker_toward"] = bucket_to_json(cell.top_toward);
        c["top_talker_away"] = bucket_to_json(cell.top_away);
        c["toward_vs_away"] = cell.toward_vs_away ? test_to_json(*cell.toward_vs_away)
                                                  : nlohmann::ordered_json(nullptr);
        figure3.push_back(std::move(c));
    }
    j["figure3"] = std::move(figure3);

    auto talk = nlohmann::ordered_json::array();
    for (const auto& cell : report.talk_accuracy) {
        talk.push_back({{"dataset", cell.dataset},
                        {"n_subjects", cell.n_subjects},
                        {"correlation", cell.correlation},
                        {"p_value", cell.p_value},
                        {"method", cell.method}});
    }
    j["talk_accuracy"] = std::move(talk);

    j["notices"] = report.notices;
    return j.dump(2);
}

namespace {

std::string format_double(double value) {
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, ptr);
}

std::string padded_id(char prefix, std::size_t value, int width) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%c%0*zu", prefix, width, value);
    return buffer;
}

}  // namespace

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                      const std::string& dataset_id) {
    out << "dataset_id,condition,group_id,task_id,subject_id,round,estimate,truth,"
           "messages_sent\n";
    for (const auto& record : records) {
        // Star probes behave like a single-revision discussion without chat.
        const char* condition = record.star_influence
                                    ? "discussion"
                                    : to_string(record.spec.condition);
        const bool has_messages = record.spec.condition == Condition::Discussion &&
                                  !record.star_influence &&
                                  !record.influence_trait.empty();
        const std::string group = padded_id('g', record.trial_index, 5);
        const std::string truth = format_double(record.spec.truth);
        for (std::size_t i = 0; i < record.pre_estimates.size(); ++i) {
            const std::string subject = padded_id('s', i, 3);
            for (std::size_t round = 0; round < record.trajectory.states.size(); ++round) {
                out << dataset_id << ',' << condition << ',' << group << ",task0," << subject
                    << ',' << round << ',' << format_double(record.trajectory.states[round][i])
                    << ',' << truth << ',';
                if (has_messages) out << llround(record.influence_trait[i]);
                out << '\n';
            }
        }
    }
}

std::string trials_to_csv(const std::vector<TrialRecord>& records,
                          const std::string& dataset_id) {
    std::ostringstream out;
    write_trials_csv(out, records, dataset_id);
    return out.str();
}

std::string sweep_table_csv(SweepAxis axis, const std::vector<double>& levels,
                            const std::vector<EnsembleReport>& reports) {
    if (levels.size() != reports.size()) {
        throw LengthMismatch("sweep table needs one level per report");
    }
    std::ostringstream out;
    out << "axis,level,trials,improved,prop_improved,ci_lo,ci_hi,mean_phi,"
           "toward_trials,toward_improved,toward_prop,away_trials,away_improved,"
           "away_prop,split_trials,split_improved,toward_vs_away_p\n";
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto& r = reports[i];
        out << to_string(axis) << ',' << format_double(levels[i]) << ',' << r.trials << ','
            << r.improved << ',' << format_double(r.proportion_improved) << ','
            << format_double(r.ci.lo) << ',' << format_double(r.ci.hi) << ','
            << format_double(r.mean_phi) << ',' << r.toward.trials << ','
            << r.toward.improved << ',' << format_double(r.toward.proportion) << ','
            << r.away.trials << ',' << r.away.improved << ','
            << format_double(r.away.proportion) << ',' << r.split.trials << ','
            << r.split.improved << ',';
        if (r.toward_vs_away) out << format_double(r.toward_vs_away->p_value);
        out << '\n';
    }
    return out.str();
}

}  // namespace crowddyn
