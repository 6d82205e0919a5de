#include "beamtrack/cli/commands.h"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "beamtrack/cli/checkpoint.h"
#include "beamtrack/evalkit/ablation.h"
#include "beamtrack/ppo/gradient_suite.h"

namespace beamtrack::cli {

namespace {

constexpr std::uint64_t kInitTag = 11;

Config load(const CommonArgs& args) {
  if (args.config_path.empty()) return parse_config("", args.overrides);
  return load_config(args.config_path, args.overrides);
}

agents::ModelDims dims_for_width(const Config& config, std::size_t width) {
  agents::ModelDims dims = config.model;
  dims.beam_width = width;
  return dims;
}

// Fresh parameters for a given master seed.
agents::PolicySet fresh_policy(const agents::ModelDims& dims, std::uint64_t seed) {
  math::Rng rng(math::derive_seed(seed, kInitTag));
  return agents::PolicySet::create(dims, rng);
}

// Initializes from the master seed and runs PPO. Throws on divergence.
agents::PolicySet train_policy(const Config& config, const agents::ModelDims& dims,
                               std::uint64_t seed, ppo::TrainResult* result) {
  agents::PolicySet nets = fresh_policy(dims, seed);
  ppo::TrainResult r = ppo::train(config.ppo, config.env, nets, seed);
  if (result) *result = std::move(r);
  return nets;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << bytes;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const evalkit::MissingCheckpointError& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const ppo::DivergenceError& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    // Remaining failures are invalid inputs or I/O problems.
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

std::string checkpoint_file_name(std::size_t width, std::uint64_t seed) {
  return "agents_b" + std::to_string(width) + "_s" + std::to_string(seed) + ".ckpt";
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config config = load(args.common);
    if (args.checkpoint_out.empty()) throw ConfigError("train: no output checkpoint path");
    ppo::TrainResult result;
    agents::PolicySet nets =
        train_policy(config, config.model, config.seed, &result);
    save_checkpoint(args.checkpoint_out, nets);
    const std::string log_path =
        args.log_out.empty() ? args.checkpoint_out + ".log.csv" : args.log_out;
    std::ostringstream log;
    ppo::write_train_log_csv(log, result.log);
    write_file(log_path, log.str());
    out << "trained " << config.ppo.episodes << " episodes, " << result.log.size()
        << " updates";
    if (!result.log.empty())
      out << ", final mean reward " << std::fixed << std::setprecision(4)
          << result.log.back().mean_reward;
    out << "\ncheckpoint: " << args.checkpoint_out << "\nlog: " << log_path << '\n';
    if (result.skipped > 0)
      err << "warning: " << result.skipped << " transitions skipped for non-finite ratios\n";
    return kExitOk;
  });
}

int cmd_track(const TrackArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config config = load(args.common);
    const tracking::Strategy strategy = args.strategy.value_or(config.track.strategy);
    std::size_t width = 1;
    if (strategy == tracking::Strategy::kNBS || strategy == tracking::Strategy::kMABS)
      width = config.track.beam_width;

    std::unique_ptr<agents::PolicySet> nets;
    if (tracking::is_learned(strategy)) {
      if (args.checkpoint.empty())
        throw CheckpointError(std::string("track: ") +
                              std::string(tracking::strategy_name(strategy)) +
                              " needs a checkpoint");
      nets = std::make_unique<agents::PolicySet>(
          fresh_policy(dims_for_width(config, width), config.seed));
      load_checkpoint(args.checkpoint, *nets);
    }
    if (args.csv_out.empty()) throw ConfigError("track: no output CSV path");

    const auto seqs =
        evalkit::evaluation_sequences(config.env.sequence, config.seed, config.track.sequences);
    std::ostringstream csv;
    csv << "sequence,frame,strategy,agent,selected,x,y,w,h,score,iou\n"
        << std::setprecision(17);
    evalkit::SequenceMetrics total;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const tracking::StrategyRun run =
          tracking::run_strategy(strategy, seqs[i], config.env.proposals, width, nets.get(),
                                 config.track.stochastic, config.seed);
      for (std::size_t k = 0; k < run.beam.trajectories.size(); ++k) {
        const tracking::Trajectory& traj = run.beam.trajectories[k];
        for (std::size_t f = 0; f < traj.picks.size(); ++f) {
          const synthenv::Proposal& p = traj.picks[f];
          const geometry::Box& gt = seqs[i].frames[f + 1].gt_box;
          csv << i << ',' << f + 1 << ',' << tracking::strategy_name(strategy) << ','
              << traj.agent << ',' << (k == run.selected ? 1 : 0) << ',' << p.box.x << ','
              << p.box.y << ',' << p.box.w << ',' << p.box.h << ',' << p.score << ','
              << geometry::iou(p.box, gt) << '\n';
        }
      }
      const evalkit::SequenceMetrics m = evalkit::score_trajectory(run.result(), seqs[i]);
      total.ao += m.ao;
      total.sr50 += m.sr50;
      total.prec20 += m.prec20;
    }
    write_file(args.csv_out, csv.str());
    const double n = static_cast<double>(seqs.size());
    out << std::fixed << std::setprecision(4) << tracking::strategy_name(strategy)
        << " B=" << width << " over " << seqs.size() << " sequences: AO " << total.ao / n
        << ", SR@0.5 " << total.sr50 / n << ", precision@20 " << total.prec20 / n << '\n';
    return kExitOk;
  });
}

int cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config config = load(args.common);
    if (args.csv_out.empty()) throw ConfigError("ablate: no output CSV path");

    std::map<std::pair<std::size_t, std::uint64_t>, std::unique_ptr<agents::PolicySet>> pool;
    const std::filesystem::path dir = args.checkpoint_dir;
    auto provider = [&](std::size_t width, std::uint64_t seed) -> const agents::PolicySet* {
      auto& slot = pool[{width, seed}];
      if (slot) return slot.get();
      if (args.checkpoint_dir.empty()) return nullptr;
      const agents::ModelDims dims = dims_for_width(config, width);
      const std::string path = (dir / checkpoint_file_name(width, seed)).string();
      if (std::filesystem::exists(path)) {
        slot = std::make_unique<agents::PolicySet>(fresh_policy(dims, seed));
        load_checkpoint(path, *slot);
      } else if (args.train_missing) {
        out << "training B=" << width << " seed " << seed << " -> " << path << '\n';
        slot = std::make_unique<agents::PolicySet>(train_policy(config, dims, seed, nullptr));
        std::filesystem::create_directories(dir);
        save_checkpoint(path, *slot);
      } else {
        return nullptr;
      }
      return slot.get();
    };

    evalkit::AblationSpec spec;
    spec.env = config.env;
    spec.strategies = config.track.strategies;
    spec.widths = config.track.widths;
    spec.seeds = config.track.seeds;
    spec.sequences = config.track.sequences;
    spec.stochastic = config.track.stochastic;
    spec.workers = config.track.workers;
    const evalkit::AblationReport report = evalkit::run_ablation(spec, provider);

    std::ostringstream csv;
    evalkit::write_report_csv(csv, report);
    write_file(args.csv_out, csv.str());
    std::ostringstream summary;
    evalkit::write_summary_csv(summary, report);
    if (!args.summary_out.empty()) write_file(args.summary_out, summary.str());
    if (!args.svg_out.empty()) {
      std::ostringstream svg;
      evalkit::write_report_svg(svg, report);
      write_file(args.svg_out, svg.str());
    }
    out << summary.str();
    return kExitOk;
  });
}

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config config = load(args.common);
    math::GradCheckOptions options;
    options.max_coords_per_array = config.track.gradcheck_coords;
    const std::size_t n = static_cast<std::size_t>(config.env.proposals.n_local +
                                                   config.env.proposals.n_global);
    const auto cases = ppo::run_gradient_suite(config.model, n, config.ppo, config.seed, options);
    bool ok = true;
    for (const ppo::GradientCase& c : cases) {
      const bool pass = c.result.max_rel_error < kGradcheckTolerance;
      ok = ok && pass;
      out << std::left << std::setw(24) << c.name << " max_rel_error " << std::scientific
          << std::setprecision(3) << c.result.max_rel_error << "  coords "
          << c.result.coords_checked << "  " << (pass ? "ok" : "FAIL") << '\n';
      if (!pass)
        err << "gradient mismatch in " << c.name << " at " << c.result.worst_param << '['
            << c.result.worst_index << "]\n";
    }
    return ok ? kExitOk : kExitGradcheckFailed;
  });
}

}  // namespace beamtrack::cli
