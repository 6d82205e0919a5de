#include "beamtrack/evalkit/ablation.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace beamtrack::evalkit {

namespace {

constexpr std::uint64_t kEvalTag = 201;

struct Cell {
  Strategy strategy;
  std::size_t width;
  std::uint64_t seed;
};

std::vector<std::size_t> widths_for(Strategy s, const std::vector<std::size_t>& widths) {
  if (s == Strategy::kNBS || s == Strategy::kMABS) return widths;
  return {1};
}

void mean_stderr(const std::vector<double>& xs, double& mean, double& stderr_out) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  stderr_out = 0.0;
  if (xs.size() < 2) return;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double n = static_cast<double>(xs.size());
  stderr_out = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

std::string label(Strategy s, std::size_t width) {
  std::string out(tracking::strategy_name(s));
  if (s == Strategy::kNBS || s == Strategy::kMABS) out += " B=" + std::to_string(width);
  return out;
}

}  // namespace

synthenv::EnvSpec noiseless_benchmark() {
  synthenv::EnvSpec env;
  env.sequence.occlusion.probability = 0.0;
  env.sequence.score_noise_sigma = 0.0;
  env.sequence.feature_noise_sigma = 0.0;
  return env;
}

synthenv::EnvSpec occlusion_benchmark() {
  synthenv::EnvSpec env;
  env.sequence.occlusion.probability = 0.6;
  env.sequence.occlusion.min_length = 4;
  env.sequence.occlusion.max_length = 8;
  env.sequence.occlusion.period = 15;
  env.sequence.distractors.count = 2;
  env.sequence.distractors.similarity = 0.7;
  env.sequence.score_noise_sigma = 0.05;
  env.sequence.feature_noise_sigma = 0.05;
  return env;
}

std::vector<synthenv::Sequence> evaluation_sequences(const synthenv::SequenceSpec& spec,
                                                     std::uint64_t seed,
                                                     std::size_t count) {
  std::vector<synthenv::Sequence> out;
  out.reserve(count);
  const std::uint64_t base = math::derive_seed(seed, kEvalTag);
  for (std::size_t i = 0; i < count; ++i) {
    synthenv::SequenceSpec s = spec;
    s.seed = math::derive_seed(base, i);
    out.push_back(synthenv::generate_sequence(s));
  }
  return out;
}

SequenceMetrics score_trajectory(const tracking::Trajectory& traj,
                                 const synthenv::Sequence& seq) {
  require(traj.picks.size() + 1 == seq.frames.size(),
          "score_trajectory: trajectory must cover frames 1..T-1");
  std::vector<Box> truth;
  truth.reserve(traj.picks.size());
  for (std::size_t t = 1; t < seq.frames.size(); ++t) truth.push_back(seq.frames[t].gt_box);
  const RunResult run = RunResult::from_boxes(traj.boxes(), std::move(truth));
  return {average_overlap(run), success_rate(run, 0.5), precision_at(run, 20.0)};
}

double AblationReport::mean_ao(Strategy s, std::size_t width) const {
  for (const AblationSummary& g : summary)
    if (g.strategy == s && g.beam_width == width) return g.ao_mean;
  throw ContractError("ablation report: no rows for " + label(s, width));
}

AblationReport run_ablation(const AblationSpec& spec, const PolicyProvider& policies) {
  spec.env.sequence.validate();
  spec.env.proposals.validate();
  require(!spec.strategies.empty(), "ablation: no strategies");
  require(!spec.seeds.empty(), "ablation: no seeds");
  require(spec.sequences >= 1, "ablation: need at least one sequence");

  std::vector<Cell> cells;
  for (Strategy s : spec.strategies)
    for (std::size_t w : widths_for(s, spec.widths))
      for (std::uint64_t seed : spec.seeds) cells.push_back({s, w, seed});

  // Resolve every checkpoint up front so a missing one fails before work.
  std::vector<const agents::PolicySet*> nets(cells.size(), nullptr);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    require(cells[i].width >= 1, "ablation: beam width must be >= 1");
    if (!tracking::is_learned(cells[i].strategy)) continue;
    nets[i] = policies ? policies(cells[i].width, cells[i].seed) : nullptr;
    if (nets[i] == nullptr)
      throw MissingCheckpointError("ablation: no trained agents for " +
                                   label(cells[i].strategy, cells[i].width) +
                                   " seed " + std::to_string(cells[i].seed));
    if (nets[i]->beam_width() != cells[i].width)
      throw MissingCheckpointError("ablation: checkpoint width mismatch for " +
                                   label(cells[i].strategy, cells[i].width));
  }

  std::map<std::uint64_t, std::vector<synthenv::Sequence>> sequences;
  for (std::uint64_t seed : spec.seeds)
    if (!sequences.count(seed))
      sequences.emplace(seed, evaluation_sequences(spec.env.sequence, seed, spec.sequences));

  std::vector<AblationRow> rows(cells.size());
  auto run_cell = [&](std::size_t i) {
    const Cell& c = cells[i];
    const auto& seqs = sequences.at(c.seed);
    SequenceMetrics acc;
    for (const synthenv::Sequence& seq : seqs) {
      const tracking::StrategyRun run = tracking::run_strategy(
          c.strategy, seq, spec.env.proposals, c.width, nets[i], spec.stochastic, c.seed);
      const SequenceMetrics m = score_trajectory(run.result(), seq);
      acc.ao += m.ao;
      acc.sr50 += m.sr50;
      acc.prec20 += m.prec20;
    }
    const double n = static_cast<double>(seqs.size());
    rows[i] = {c.strategy, c.width, c.seed, acc.ao / n, acc.sr50 / n, acc.prec20 / n};
  };

  const std::size_t workers = std::clamp<std::size_t>(spec.workers, 1, cells.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  AblationReport report;
  report.rows = rows;
  std::vector<std::pair<Strategy, std::size_t>> groups;
  for (const Cell& c : cells) {
    const std::pair<Strategy, std::size_t> key{c.strategy, c.width};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  for (const auto& [s, w] : groups) {
    std::vector<double> ao, sr, pr;
    for (const AblationRow& r : rows) {
      if (r.strategy != s || r.beam_width != w) continue;
      ao.push_back(r.ao);
      sr.push_back(r.sr50);
      pr.push_back(r.prec20);
    }
    AblationSummary g;
    g.strategy = s;
    g.beam_width = w;
    g.n = ao.size();
    mean_stderr(ao, g.ao_mean, g.ao_stderr);
    mean_stderr(sr, g.sr50_mean, g.sr50_stderr);
    mean_stderr(pr, g.prec20_mean, g.prec20_stderr);
    report.summary.push_back(g);
  }
  return report;
}

void write_report_csv(std::ostream& out, const AblationReport& report) {
  std::ostringstream os;
  os << "strategy,beam_width,seed,ao,sr50,prec20\n" << std::fixed << std::setprecision(6);
  for (const AblationRow& r : report.rows) {
    os << tracking::strategy_name(r.strategy) << ',' << r.beam_width << ',' << r.seed << ','
       << r.ao << ',' << r.sr50 << ',' << r.prec20 << '\n';
  }
  out << os.str();
}

void write_summary_csv(std::ostream& out, const AblationReport& report) {
  std::ostringstream os;
  os << "strategy,beam_width,n,ao_mean,ao_stderr,sr50_mean,sr50_stderr,prec20_mean,"
        "prec20_stderr\n"
     << std::fixed << std::setprecision(6);
  for (const AblationSummary& g : report.summary) {
    os << tracking::strategy_name(g.strategy) << ',' << g.beam_width << ',' << g.n << ','
       << g.ao_mean << ',' << g.ao_stderr << ',' << g.sr50_mean << ',' << g.sr50_stderr
       << ',' << g.prec20_mean << ',' << g.prec20_stderr << '\n';
  }
  out << os.str();
}

void write_report_svg(std::ostream& out, const AblationReport& report) {
  constexpr double kW = 800, kH = 500;
  constexpr double kLeft = 70, kRight = 30, kTop = 40, kBottom = 80;
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;
  const std::size_t n = report.summary.size();

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
        "viewBox=\"0 0 800 500\">\n";
  os << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  os << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"16\">Average overlap by search strategy</text>\n";
  // Axes and y ticks over AO in [0, 1].
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
     << kTop + plot_h << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\""
     << kLeft + plot_w << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = k / 5.0;
    const double y = kTop + plot_h * (1.0 - v);
    os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\""
       << y << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << v
       << "</text>\n";
  }
  os << "<text x=\"18\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 18 "
     << kTop + plot_h / 2 << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\">AO</text>\n";
  if (n > 0) {
    const double slot = plot_w / static_cast<double>(n);
    const double bar = slot * 0.6;
    for (std::size_t i = 0; i < n; ++i) {
      const AblationSummary& g = report.summary[i];
      const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
      const double v = std::clamp(g.ao_mean, 0.0, 1.0);
      const double top = kTop + plot_h * (1.0 - v);
      os << "<rect x=\"" << cx - bar / 2 << "\" y=\"" << top << "\" width=\"" << bar
         << "\" height=\"" << kTop + plot_h - top << "\" fill=\"#4c78a8\"/>\n";
      const double hi = kTop + plot_h * (1.0 - std::clamp(g.ao_mean + g.ao_stderr, 0.0, 1.0));
      const double lo = kTop + plot_h * (1.0 - std::clamp(g.ao_mean - g.ao_stderr, 0.0, 1.0));
      os << "<line x1=\"" << cx << "\" y1=\"" << hi << "\" x2=\"" << cx << "\" y2=\"" << lo
         << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << cx << "\" y=\"" << kTop + plot_h + 20
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
         << label(g.strategy, g.beam_width) << "</text>\n";
      os << "<text x=\"" << cx << "\" y=\"" << top - 6
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
         << std::setprecision(3) << g.ao_mean << std::setprecision(2) << "</text>\n";
    }
  }
  os << "</svg>\n";
  out << os.str();
}

}  // namespace beamtrack::evalkit
