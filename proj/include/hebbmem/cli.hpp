#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hebbmem/analysis.hpp"
#include "hebbmem/experiments.hpp"
#include "hebbmem/patterns.hpp"

namespace hebbmem::cli {

/// Bad flag values discovered after parsing; reported like parse errors.
class UsageError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Options {
  std::vector<std::string> rules{"bcpnn"};
  std::vector<std::string> archs;
  std::vector<std::string> patterns{"hrand"};
  std::vector<std::uint32_t> hm;
  double distort = 0.10;
  std::optional<double> train_distort;
  double silent_frac = 0.25;
  double fp = 0.10;
  int runs = 5;
  int ninst = 10;
  std::uint64_t seed = 0;
  int workers = 1;
  int max_iter = 10;
  double threshold = 90.0;
  long p0 = 0;
  bool zero_diagonal = false;
  std::string update = "sequential";
  std::vector<double> levels;
  std::vector<double> fractions;
  std::size_t count = 40;
  std::size_t pairs = 40;
  bool pretty = false;
  std::string in;
  std::string out;
};

namespace detail {

inline std::string join(const std::vector<std::string>& xs, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? std::string(1, sep) : "") + xs[i];
  return s;
}

inline std::vector<Rule> rules_of(const Options& o) {
  std::vector<Rule> out;
  for (const auto& r : o.rules) {
    if (r == "all") {
      out.assign(kAllRules.begin(), kAllRules.end());
      return out;
    }
    out.push_back(parse_rule(r));
  }
  return out;
}

inline std::vector<PatternKind> kinds_of(const Options& o) {
  std::vector<PatternKind> out;
  for (const auto& p : o.patterns) out.push_back(parse_pattern_kind(p));
  return out;
}

/// Explicit --arch, else the native architecture of each requested kind.
inline std::vector<Architecture> archs_of(const Options& o) {
  std::vector<Architecture> out;
  if (!o.archs.empty()) {
    for (const auto& a : o.archs) out.push_back(parse_architecture(a));
    return out;
  }
  for (auto k : kinds_of(o)) {
    const auto a = is_unstructured(k) ? Architecture::non_modular : Architecture::modular;
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  }
  return out;
}

inline std::vector<std::pair<std::uint32_t, std::uint32_t>> sizes_of(
    const Options& o, std::pair<std::uint32_t, std::uint32_t> fallback) {
  if (o.hm.empty()) return {fallback};
  if (o.hm.size() % 2 != 0) throw UsageError("--hm takes pairs H M");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::size_t i = 0; i < o.hm.size(); i += 2) {
    if (o.hm[i] == 0 || o.hm[i + 1] == 0) throw UsageError("--hm values must be positive");
    out.emplace_back(o.hm[i], o.hm[i + 1]);
  }
  return out;
}

inline std::string hm_string(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& sizes) {
  std::string s;
  for (auto [h, m] : sizes) s += " --hm " + std::to_string(h) + ' ' + std::to_string(m);
  return s;
}

inline std::string numbers(const std::vector<double>& xs) {
  std::vector<std::string> parts;
  for (double x : xs) parts.push_back(format_number(x));
  return join(parts);
}

inline SweepSpec sweep_of(const Options& o, const std::string& verb) {
  SweepSpec s;
  s.verb = verb;
  s.rules = rules_of(o);
  s.architectures = archs_of(o);
  s.kinds = kinds_of(o);
  s.sizes = sizes_of(o, {16, 16});
  s.distortion = o.distort;
  s.silent_fraction = o.silent_frac;
  s.f_p = o.fp;
  s.runs = o.runs;
  s.master_seed = o.seed;
  s.workers = o.workers;
  s.max_iterations = o.max_iter;
  s.zero_diagonal = o.zero_diagonal;
  s.update_order = o.update == "synchronous" ? UpdateOrder::synchronous : UpdateOrder::sequential;
  s.threshold = o.threshold;
  s.bisection.P0 = o.p0;
  for (auto [h, m] : s.sizes)
    for (auto k : s.kinds)
      if (k == PatternKind::silent && m < 2) throw UsageError("silent patterns need M >= 2");
  return s;
}

/// Flags that determine the content of a sweep's output (not --out/--workers).
inline std::string sweep_echo(const std::string& verb, const Options& o, const SweepSpec& s) {
  std::vector<std::string> rules, archs, kinds;
  for (auto r : s.rules) rules.emplace_back(to_string(r));
  for (auto a : s.architectures) archs.emplace_back(to_string(a));
  for (auto k : s.kinds) kinds.emplace_back(to_string(k));
  std::string e = "hebbmem " + verb + " --rule " + join(rules) + " --arch " + join(archs);
  if (verb != "sweep-silent") e += " --pattern " + join(kinds);
  e += hm_string(s.sizes);
  if (verb != "sweep-distort") e += " --distort " + format_number(o.distort);
  if (verb == "prototype") {
    e += " --ninst " + std::to_string(o.ninst);
    e += " --train-distort " + format_number(o.train_distort.value_or(o.distort));
  }
  if (verb == "sweep-distort") e += " --levels " + numbers(o.levels);
  if (verb == "sweep-silent")
    e += " --fractions " + numbers(o.fractions);
  else
    e += " --silent-frac " + format_number(o.silent_frac);
  e += " --fp " + format_number(o.fp) + " --runs " + std::to_string(o.runs) + " --max-iter " +
       std::to_string(o.max_iter) + " --threshold " + format_number(o.threshold) + " --p0 " +
       std::to_string(o.p0) + " --update " + o.update + (o.zero_diagonal ? " --zero-diagonal" : "") +
       " --seed " + std::to_string(o.seed);
  return e;
}

struct FitGroup {
  std::vector<CapacityPoint> points;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

/// Per-run rows of standard-kind (hrand/nrand) capacity CSV data, grouped by
/// (rule, arch).
inline std::map<std::pair<std::string, std::string>, FitGroup> read_fit_points(std::istream& is) {
  std::map<std::pair<std::string, std::string>, FitGroup> groups;
  std::map<std::string, std::size_t> col;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    if (col.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = i;
      for (const char* need : {"rule", "arch", "kind", "H", "M", "run", "P90"})
        if (!col.count(need)) throw std::runtime_error(std::string("capacity CSV lacks column ") + need);
      continue;
    }
    const auto at = [&](const char* name) -> const std::string& { return cells.at(col.at(name)); };
    const std::string& run = at("run");
    if (run.empty() || !std::all_of(run.begin(), run.end(), ::isdigit)) continue;
    const std::string& kind = at("kind");
    if (kind != "hrand" && kind != "nrand") continue;
    if (at("P90") == "ERROR") continue;
    const auto arch = parse_architecture(at("arch"));
    const Layout layout(arch, static_cast<std::uint32_t>(std::stoul(at("H"))),
                        static_cast<std::uint32_t>(std::stoul(at("M"))));
    groups[{at("rule"), at("arch")}].points.push_back({layout, std::stod(at("P90"))});
  }
  return groups;
}

inline void check_output_path(const std::string& out) {
  if (out.empty()) return;
  const std::filesystem::path p(out);
  const auto parent = p.has_parent_path() ? p.parent_path() : std::filesystem::path(".");
  if (!std::filesystem::is_directory(parent))
    throw UsageError("output directory does not exist: " + parent.string());
  if (std::filesystem::is_directory(p)) throw UsageError("output path is a directory: " + out);
}

/// Writes the whole payload at once so a failed run leaves no partial file.
inline void emit(const std::string& out, const std::string& payload, std::ostream& stdout_sink) {
  if (out.empty()) {
    stdout_sink << payload;
    return;
  }
  const std::string tmp = out + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << payload;
    if (!f.flush()) throw std::runtime_error("cannot write " + out);
  }
  std::filesystem::rename(tmp, out);
}

}  // namespace detail

inline void add_common(CLI::App* sub, Options& o, bool multi_rule = true) {
  if (multi_rule)
    sub->add_option("--rule", o.rules, "Learning rules (comma list or 'all'): will,hebb,hopf,cov,prcov,bcpnn")
        ->delimiter(',')
        ->capture_default_str();
  else
    sub->add_option("--rule", o.rules, "Learning rule")->expected(1)->capture_default_str();
  sub->add_option("--arch", o.archs, "Architectures: modular,non-modular (default: native to --pattern)")
      ->delimiter(',');
  sub->add_option("--hm", o.hm, "Network size H M; repeat for several sizes (default 16 16)")
      ->expected(2)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sub->add_option("--silent-frac", o.silent_frac, "Fraction of silent hypercolumns")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--fp", o.fp, "Correlation parameter f_p for c-kinds")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--runs", o.runs, "Independent bisection runs per cell")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  sub->add_option("--workers", o.workers, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--max-iter", o.max_iter, "Recall iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--threshold", o.threshold, "Recall threshold in percent")
      ->check(CLI::Range(0.0, 100.0))
      ->capture_default_str();
  sub->add_option("--p0", o.p0, "Bisection start (0: scaling-law prediction)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--update", o.update, "Modular recall order")
      ->check(CLI::IsMember({"sequential", "synchronous"}))
      ->capture_default_str();
  sub->add_flag("--zero-diagonal", o.zero_diagonal, "Zero self-connections");
  sub->add_option("--out", o.out, "Output CSV path (default stdout)");
}

/// Parses argv, runs the selected verb and writes its output. Returns 0 on
/// success, 2 on usage errors and 1 on runtime errors.
inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
  CLI::App app{"Hebbian associative-memory benchmark: pattern storage and prototype extraction"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen", "Generate patterns as a text grid");
  gen->add_option("--pattern", o.patterns, "Pattern kind: nrand,hrand,silent,cnrand,chrand")
      ->expected(1)
      ->capture_default_str();
  gen->add_option("--hm", o.hm, "Network size H M (default 16 16)")->expected(2);
  gen->add_option("--count", o.count, "Number of patterns")->capture_default_str();
  gen->add_option("--silent-frac", o.silent_frac, "Fraction of silent hypercolumns")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen->add_option("--fp", o.fp, "Correlation parameter f_p")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  gen->add_flag("--pretty", o.pretty, "Mark hypercolumn boundaries with '|'");
  gen->add_option("--out", o.out, "Output path (default stdout)");

  auto* cap = app.add_subcommand("capacity", "Storage capacity P90 by stochastic bisection");
  add_common(cap, o);
  cap->add_option("--pattern", o.patterns, "Pattern kinds")->delimiter(',')->capture_default_str();
  cap->add_option("--distort", o.distort, "Fraction of hypercolumns resampled in test cues")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  auto* proto = app.add_subcommand("prototype", "Prototype-extraction capacity by stochastic bisection");
  add_common(proto, o);
  proto->add_option("--pattern", o.patterns, "Pattern kinds")->delimiter(',')->capture_default_str();
  proto->add_option("--distort", o.distort, "Fraction of hypercolumns resampled in test instances")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  proto->add_option("--train-distort", o.train_distort,
                    "Fraction resampled in training instances (default: --distort)")
      ->check(CLI::Range(0.0, 1.0));
  proto->add_option("--ninst", o.ninst, "Training instances per prototype")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* sd = app.add_subcommand("sweep-distort", "Capacity and bits per weight across distortion levels");
  add_common(sd, o);
  sd->add_option("--pattern", o.patterns, "Pattern kinds")->delimiter(',')->capture_default_str();
  sd->add_option("--levels", o.levels, "Distortion fractions (comma list)")->delimiter(',')->required();

  auto* ss = app.add_subcommand("sweep-silent", "Capacity across silent-hypercolumn fractions");
  add_common(ss, o);
  ss->add_option("--distort", o.distort, "Fraction of active hypercolumns resampled")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  ss->add_option("--fractions", o.fractions, "Silent fractions (comma list)")->delimiter(',')->required();

  auto* tr = app.add_subcommand("trajectory", "Weight trajectories during one-shot training");
  tr->add_option("--rule", o.rules, "Learning rule")->expected(1)->capture_default_str();
  tr->add_option("--pattern", o.patterns, "Pattern kind")->expected(1)->capture_default_str();
  tr->add_option("--hm", o.hm, "Network size H M (default 10 10)")->expected(2);
  tr->add_option("--count", o.count, "Training patterns (default 60)");
  tr->add_option("--pairs", o.pairs, "Watched synapses, uniformly spaced")->capture_default_str();
  tr->add_option("--silent-frac", o.silent_frac, "Fraction of silent hypercolumns")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  tr->add_option("--fp", o.fp, "Correlation parameter f_p")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  tr->add_flag("--zero-diagonal", o.zero_diagonal, "Zero self-connections");
  tr->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  tr->add_option("--out", o.out, "Output CSV path (default stdout)");

  auto* fit = app.add_subcommand("fit", "Fit bits per weight to capacity CSV data");
  fit->add_option("--in", o.in, "Capacity CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", o.out, "Output CSV path (default stdout)");

  std::string payload;
  try {
    app.parse(argc, argv);
    detail::check_output_path(o.out);

    if (gen->parsed()) {
      const auto kind = parse_pattern_kind(o.patterns.at(0));
      const auto sizes = detail::sizes_of(o, {16, 16});
      if (sizes.size() != 1) throw UsageError("gen takes a single --hm");
      const auto [H, M] = sizes.front();
      if (kind == PatternKind::silent && M < 2) throw UsageError("silent patterns need M >= 2");
      const auto arch = is_unstructured(kind) ? Architecture::non_modular : Architecture::modular;
      const Layout layout(arch, H, M);
      PatternSpec spec{kind, o.silent_frac, o.fp, std::nullopt};
      Rng rng(seed_derivation(o.seed, {"gen", Rule::BCPNN, arch, kind, H, M, 0, "patterns"}));
      std::ostringstream os;
      for (const auto& p : generate_set(layout, spec, o.count, rng)) os << to_text_grid(p, o.pretty) << '\n';
      payload = os.str();
    } else if (cap->parsed() || proto->parsed()) {
      const std::string verb = cap->parsed() ? "capacity" : "prototype";
      const auto s = detail::sweep_of(o, verb);
      const auto comment = detail::sweep_echo(verb, o, s);
      const auto rows = cap->parsed() ? storage_scaling(s) : prototype_scaling(s, o.ninst, o.train_distort);
      std::ostringstream os;
      write_capacity_csv(os, rows, comment);
      payload = os.str();
    } else if (sd->parsed()) {
      for (double l : o.levels)
        if (!(l > 0.0 && l <= 1.0)) throw UsageError("--levels must lie in (0, 1]");
      const auto s = detail::sweep_of(o, "sweep-distort");
      const auto comment = detail::sweep_echo("sweep-distort", o, s);
      std::ostringstream os;
      write_capacity_csv(os, distortion_sweep(s, o.levels), comment, true);
      payload = os.str();
    } else if (ss->parsed()) {
      for (double f : o.fractions)
        if (!(f >= 0.0 && f < 1.0)) throw UsageError("--fractions must lie in [0, 1)");
      Options so = o;
      so.patterns = {"silent"};
      const auto s = detail::sweep_of(so, "sweep-silent");
      SweepSpec s19 = s;
      if (o.hm.empty()) s19.sizes = {{19, 19}};
      const auto comment = detail::sweep_echo("sweep-silent", so, s19);
      std::ostringstream os;
      write_capacity_csv(os, silent_sweep(s19, o.fractions), comment);
      payload = os.str();
    } else if (tr->parsed()) {
      const auto rule = parse_rule(o.rules.at(0));
      const auto kind = parse_pattern_kind(o.patterns.at(0));
      const auto sizes = detail::sizes_of(o, {10, 10});
      if (sizes.size() != 1) throw UsageError("trajectory takes a single --hm");
      const auto [H, M] = sizes.front();
      if (kind == PatternKind::silent && M < 2) throw UsageError("silent patterns need M >= 2");
      const std::size_t count = tr->count("--count") ? o.count : 60;
      const auto arch = is_unstructured(kind) ? Architecture::non_modular : Architecture::modular;
      NetworkConfig cfg{Layout(arch, H, M), rule, 10, o.zero_diagonal, UpdateOrder::sequential};
      PatternSpec spec{kind, o.silent_frac, o.fp, std::nullopt};
      // The training set depends only on (seed, layout, kind), so every rule sees the same one.
      Rng rng(seed_derivation(o.seed, {"trajectory", Rule::BCPNN, arch, kind, H, M, 0, "training"}));
      const auto training = generate_set(cfg.layout, spec, count, rng);
      const auto rows = weight_trajectories(cfg, training, default_watch_pairs(cfg.layout.N(), o.pairs));
      std::ostringstream os;
      write_trajectory_csv(os,
                           rows,
                           "hebbmem trajectory --rule " + std::string(to_string(rule)) + " --pattern " +
                               std::string(to_string(kind)) + " --hm " + std::to_string(H) + ' ' +
                               std::to_string(M) + " --count " + std::to_string(count) + " --pairs " +
                               std::to_string(o.pairs) + " --silent-frac " + format_number(o.silent_frac) +
                               " --fp " + format_number(o.fp) + (o.zero_diagonal ? " --zero-diagonal" : "") +
                               " --seed " + std::to_string(o.seed));
      payload = os.str();
    } else if (fit->parsed()) {
      std::ifstream in(o.in);
      if (!in) throw std::runtime_error("cannot read " + o.in);
      const auto groups = detail::read_fit_points(in);
      std::ostringstream os;
      os << "rule,arch,I_w,residual,n_points\n";
      for (const auto& [key, g] : groups) {
        const auto f = fit_bits_per_weight(g.points);
        os << key.first << ',' << key.second << ',' << format_number(f.I_w) << ','
           << format_number(f.residual) << ',' << f.n_points << '\n';
      }
      payload = os.str();
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    detail::emit(o.out, payload, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace hebbmem::cli
