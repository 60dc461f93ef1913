#include "pearl/cli.hpp"

#include "pearl/config.hpp"
#include "pearl/errors.hpp"
#include "pearl/io.hpp"
#include "pearl/learner.hpp"
#include "pearl/simulator.hpp"
#include "pearl/stats.hpp"

#include <iomanip>
#include <map>
#include <sstream>

namespace pearl::cli {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

template <typename Writer>
std::string render(Writer &&w) {
    std::ostringstream os;
    w(os);
    return os.str();
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

} // namespace

int cmd_simulate(const SimulateOptions &opts, std::ostream &err) {
    TrialConfig cfg;
    try {
        if (opts.config) cfg = load_config(*opts.config);
        if (opts.seed) cfg.seed = *opts.seed;
        cfg.validate();
    } catch (const ConfigInvalid &e) {
        err << "error: invalid config: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError &e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    RunManifest manifest;
    manifest.seed = cfg.seed;
    manifest.config_hash = config_hash(cfg);
    manifest.engine_version = std::string(engine_version());
    manifest.threads = opts.threads;
    manifest.config = canonical_config(cfg);
    manifest.started_at = utc_timestamp();
    const auto manifest_path = opts.out_dir / "manifest.json";
    try {
        ensure_dir(opts.out_dir);
        write_text_file(manifest_path, manifest.to_json());
    } catch (const IoError &e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }

    TrialLog log;
    try {
        const DayObserver progress = [&](int day, const TrialLog &) {
            if (!opts.quiet && (day % 10 == 0 || day == cfg.study_days)) {
                err << "day " << day << "/" << cfg.study_days << '\n';
            }
            return true;
        };
        log = run_trial(cfg, opts.threads, progress);
    } catch (const ConfigInvalid &e) {
        err << "error: invalid config: " << e.what() << '\n';
        return kExitConfig;
    } catch (const EmptyBucket &e) {
        err << "error: message repository: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SchemaError &e) {
        err << "error: message repository: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError &e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }

    try {
        std::vector<std::pair<std::string, std::string>> files{
            {"steps.csv", render([&](std::ostream &o) { write_steps_csv(o, log); })},
            {"decisions.csv", render([&](std::ostream &o) { write_decisions_csv(o, log); })},
            {"feedback.csv", render([&](std::ostream &o) { write_feedback_csv(o, log); })},
        };
        if (opts.export_model && log.final_model) {
            files.emplace_back("reward_model.json", log.final_model->to_json());
            files.emplace_back("feature_importance.csv", render([&](std::ostream &o) {
                                   write_feature_importance_csv(o, feature_importance(*log.final_model));
                               }));
        }
        for (const auto &[name, text] : files) {
            write_text_file(opts.out_dir / name, text);
            manifest.outputs.push_back({name, text.size(), sha256_hex(text)});
        }
        manifest.status = "complete";
        manifest.finished_at = utc_timestamp();
        write_text_file(manifest_path, manifest.to_json());
    } catch (const IoError &e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
    if (!opts.quiet) {
        std::size_t withdrawn = 0;
        for (const auto &p : log.participants) withdrawn += p.withdrawal_day ? 1 : 0;
        err << "simulated " << log.participants.size() << " participants over " << log.study_days << " days ("
            << withdrawn << " withdrew); wrote " << opts.out_dir.string() << '\n';
    }
    return kExitOk;
}

int cmd_analyze(const fs::path &log_dir, const fs::path &out_dir, std::ostream &err) {
    AnalysisResults res;
    try {
        const auto log = read_trial_dir(log_dir);
        if (log.participants.empty()) throw InsufficientData("log contains no participants");
        res = analyze(log);
    } catch (const IoError &e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        ensure_dir(out_dir);
        write_text_file(out_dir / "table3.csv", render([&](std::ostream &o) { write_table3_csv(o, res.summary); }));
        write_text_file(out_dir / "table4.csv", render([&](std::ostream &o) { write_table4_csv(o, res.comparisons); }));
        write_text_file(out_dir / "table6.csv", render([&](std::ostream &o) { write_table6_csv(o, res.gee); }));
        write_text_file(out_dir / "results.json", res.to_json());
    } catch (const IoError &e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitOk;
}

int cmd_report(const fs::path &results_dir, const fs::path &out_dir, std::ostream &err) {
    AnalysisResults res;
    try {
        res = AnalysisResults::from_json(read_text_file(results_dir / "results.json"));
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::map<Arm, std::map<int, const DailyMean *>> by_arm;
    for (const auto &d : res.daily) by_arm[d.arm][d.day] = &d;

    std::ostringstream csv;
    csv << "arm,day,mean_steps,n\n";
    for (auto arm : kAllArms) {
        const auto it = by_arm.find(arm);
        if (it == by_arm.end()) {
            err << "warning: arm " << arm_name(arm) << " has no step data; omitted\n";
            continue;
        }
        for (int day = 1; day <= res.study_days; ++day) {
            const auto d = it->second.find(day);
            csv << arm_name(arm) << ',' << day << ',';
            if (d != it->second.end()) {
                csv << fixed(d->second->mean, 3) << ',' << d->second->n;
            } else {
                csv << ",0";
            }
            csv << '\n';
        }
    }

    std::ostringstream txt;
    txt << "Average daily steps by arm and period\n";
    for (const auto &c : res.summary.cells) {
        txt << "  " << std::left << std::setw(8) << arm_name(c.arm) << std::setw(9) << period_name(c.period)
            << std::right << std::setw(10) << fixed(c.mean, 1) << "  (SD " << fixed(c.sd, 1) << ", n=" << c.n << ")\n";
    }
    txt << "\nDifference in differences (change from baseline)\n";
    for (const auto &r : res.comparisons) {
        txt << "  " << std::left << std::setw(18) << r.label << std::setw(8) << period_name(r.period) << std::right
            << " B=" << fixed(r.estimate, 1) << " SE=" << fixed(r.se, 1) << " p=" << fixed(r.p_value, 4);
        if (r.adjusted_p) txt << " adjusted p=" << fixed(*r.adjusted_p, 4);
        txt << '\n';
    }
    txt << "\nGEE (exchangeable, rho=" << fixed(res.gee.rho, 4) << ")\n";
    for (const auto &t : res.gee.terms) {
        txt << "  " << std::left << std::setw(34) << t.name << std::right << std::setw(10) << fixed(t.estimate, 2)
            << "  (" << fixed(t.ci_low, 2) << ", " << fixed(t.ci_high, 2) << ")  p=" << fixed(t.p_value, 4) << '\n';
    }

    try {
        ensure_dir(out_dir);
        write_text_file(out_dir / "daily_means.csv", csv.str());
        write_text_file(out_dir / "summary.txt", txt.str());
    } catch (const IoError &e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitOk;
}

} // namespace pearl::cli
