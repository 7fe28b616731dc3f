// Copyright 2026 The vmrtk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Everything numeric happens behind the C API in
// libvmrtk; this file only parses flags, moves bytes between files and the
// library, and renders figures.
//
// Exit codes: 0 success, 1 usage/validation error, 2 internal error,
// 3 verification failure (gradcheck below tolerance).

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "svg.hpp"
#include "vmrtk/vmrtk.h"

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

struct ExitError {
  int code;
  std::string message;
};

[[noreturn]] void die(int code, const std::string& msg) {
  throw ExitError{code, msg};
}

int exit_code_for(int rc) {
  return rc == VMR_OK ? 0 : (rc == VMR_ERR_INTERNAL ? 2 : 1);
}

void check(int rc, const std::string& context) {
  if (rc != VMR_OK) die(exit_code_for(rc), context + ": " + vmr_last_error());
}

std::string take_string(char* s) {
  std::string out = s == nullptr ? "" : s;
  vmr_string_free(s);
  return out;
}

struct TableDeleter {
  void operator()(vmr_table* t) const { vmr_table_free(t); }
};
using TablePtr = std::unique_ptr<vmr_table, TableDeleter>;

TablePtr load_table(const std::string& path, int format) {
  vmr_table* t = nullptr;
  check(vmr_table_load(path.c_str(), format, &t), "loading " + path);
  return TablePtr(t);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(1, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) die(1, "cannot write " + path);
  out << content;
  out.flush();
  if (!out) die(1, "failed while writing " + path);
}

// Shortest round-trip decimal form, used everywhere a double lands in CSV.
std::string fmt(double v) { return json(v).dump(); }

int parse_format(const std::string& name) {
  if (name == "auto") return VMR_FORMAT_AUTO;
  if (name == "binary") return VMR_FORMAT_BINARY;
  if (name == "csv") return VMR_FORMAT_CSV;
  die(1, "format must be auto, binary or csv");
}

std::vector<double> parse_doubles(const std::string& csv, const char* what) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      die(1, std::string(what) + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) die(1, std::string(what) + " is empty");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stoull(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      die(1, "--seeds: '" + item + "' is not an unsigned integer");
    }
  }
  if (out.empty()) die(1, "--seeds is empty");
  return out;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag.has_value()) return *flag;
  if (const char* env = std::getenv("MF_SEED")) {
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(env, &pos);
      if (pos == std::strlen(env)) return v;
    } catch (const std::exception&) {
    }
    die(1, "MF_SEED must be an unsigned integer");
  }
  return 0;
}

void apply_threads(int threads) {
  check(vmr_set_max_threads(threads), "--threads");
}

// One manifest per primary output file; rerunning its argv must reproduce
// every listed output byte for byte.
void write_manifest(const std::string& subcommand,
                    const std::vector<std::string>& argv,
                    const std::optional<std::uint64_t>& seed,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  if (outputs.empty()) return;
  ordered_json m;
  m["tool"] = "vmrtk";
  m["version"] = vmr_version();
  m["subcommand"] = subcommand;
  if (seed.has_value())
    m["seed"] = *seed;
  else
    m["seed"] = nullptr;
  m["argv"] = argv;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  write_file(outputs.front() + ".manifest.json", m.dump(2) + "\n");
}

void emit_report(const std::string& report, const std::string& out_path) {
  if (out_path.empty())
    std::cout << report << "\n";
  else
    write_file(out_path, report + "\n");
}

/* ---- figures ------------------------------------------------------------*/

std::string events_figure(const json& r, double threshold) {
  const double width = 900.0, height = 280.0;
  const double left = 60.0, right = width - 30.0;
  svg::Canvas canvas(width, height);

  const double horizon = r["horizon"].get<double>();
  const auto& events = r["events"];
  const auto& scores = r["boundary_scores"];
  const std::size_t t_frames = scores.size() + 1;
  const double period = horizon / static_cast<double>(t_frames);
  auto x_of = [&](double t) {
    return left + (right - left) * (t / horizon);
  };

  canvas.text(left, 22, r.value("video_id", std::string("frames")) + "  (" +
                            std::to_string(events.size()) + " events, " +
                            std::to_string(t_frames) + " frames)", 13);

  // Event track.
  const double track_top = 40.0, track_h = 36.0;
  const char* fills[2] = {"#4e79a7", "#9ecae1"};
  for (std::size_t i = 0; i < events.size(); ++i) {
    const double s = events[i][0].get<double>();
    const double e = events[i][1].get<double>();
    canvas.rect(x_of(s), track_top, x_of(e) - x_of(s), track_h, fills[i % 2]);
    canvas.line(x_of(e), track_top - 4, x_of(e), track_top + track_h + 4,
                "#333333");
  }
  canvas.text(left, track_top + track_h + 18, "0", 11);
  canvas.text(right, track_top + track_h + 18, fmt(horizon), 11, "#222222",
              "end");

  // Boundary-score bars.
  const double plot_top = 120.0, plot_bot = height - 26.0;
  double smax = threshold;
  for (const auto& s : scores)
    smax = std::max(smax, std::abs(s.get<double>()));
  smax *= 1.15;
  if (smax <= 0.0) smax = 1.0;
  const double zero_y = plot_top + (plot_bot - plot_top) * 0.5;
  auto y_of = [&](double v) {
    return zero_y - v / smax * (plot_bot - plot_top) * 0.5;
  };
  canvas.line(left, zero_y, right, zero_y, "#888888");
  canvas.line(left, y_of(threshold), right, y_of(threshold), "#d62728", 1.0,
              true);
  canvas.text(right, y_of(threshold) - 4, "threshold " + fmt(threshold), 10,
              "#d62728", "end");
  const double bar_w =
      std::min(6.0, (right - left) / std::max<std::size_t>(scores.size(), 1) *
                        0.7);
  for (std::size_t t = 0; t < scores.size(); ++t) {
    const double v = scores[t].get<double>();
    const double x = x_of(static_cast<double>(t + 1) * period) - bar_w / 2.0;
    const double y0 = y_of(std::max(v, 0.0));
    const double h = std::abs(y_of(v) - zero_y);
    canvas.rect(x, v >= 0.0 ? y0 : zero_y, bar_w, h,
                v >= 0.0 ? "#4e79a7" : "#e15759");
  }
  canvas.text(left, plot_top - 8, "boundary score", 11);
  return canvas.str();
}

struct PanelScale {
  double lo = 0.0, hi = 1.0, a = 0.0, b = 1.0;  // data range -> pixel range
  double operator()(double v) const {
    return a + (b - a) * ((v - lo) / (hi - lo));
  }
};

std::string synth_figure(const json& r) {
  const double width = 900.0, height = 600.0;
  svg::Canvas canvas(width, height);
  const char* colors[4] = {"#6b7280", "#2563eb", "#059669", "#d97706"};
  const char* names[4] = {"mnt", "mnt+evt", "mnt+pos", "mnt+evt+pos"};
  auto config_index = [](const json& cell) {
    return (cell["use_evt"].get<bool>() ? 1 : 0) +
           (cell["use_pos"].get<bool>() ? 2 : 0);
  };

  // Panel a: loss curves of the first seed per toggle config.
  const std::uint64_t seed0 = r["config"]["seeds"][0].get<std::uint64_t>();
  std::vector<const json*> first_cells(4, nullptr);
  for (const auto& cell : r["cells"])
    if (cell["seed"].get<std::uint64_t>() == seed0)
      first_cells[config_index(cell)] = &cell;
  double lo = 1e300, hi = -1e300;
  std::size_t epochs = 1;
  for (const json* cell : first_cells) {
    if (cell == nullptr) continue;
    const auto& curve = (*cell)["loss_curve"];
    epochs = std::max(epochs, curve.size());
    for (const auto& v : curve) {
      lo = std::min(lo, v.get<double>());
      hi = std::max(hi, v.get<double>());
    }
  }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  PanelScale px{0.0, static_cast<double>(epochs - 1), 70.0, 430.0};
  PanelScale py{lo, hi, 210.0, 40.0};
  canvas.text(70, 28, "training loss (seed " + std::to_string(seed0) + ")",
              13);
  canvas.line(70, 210, 430, 210, "#333333");
  canvas.line(70, 210, 70, 40, "#333333");
  canvas.text(70, 226, "0", 10);
  canvas.text(430, 226, std::to_string(epochs - 1), 10, "#222222", "end");
  canvas.text(66, 214, fmt(lo), 10, "#222222", "end");
  canvas.text(66, 44, fmt(hi), 10, "#222222", "end");
  for (std::size_t c = 0; c < 4; ++c) {
    if (first_cells[c] == nullptr) continue;
    const auto& curve = (*first_cells[c])["loss_curve"];
    const std::size_t step = std::max<std::size_t>(1, curve.size() / 240);
    double px_prev = 0.0, py_prev = 0.0;
    bool has_prev = false;
    for (std::size_t e = 0; e < curve.size(); e += step) {
      const double x = px(static_cast<double>(e));
      const double y = py(curve[e].get<double>());
      if (has_prev) canvas.line(px_prev, py_prev, x, y, colors[c], 1.5);
      px_prev = x;
      py_prev = y;
      has_prev = true;
    }
  }

  // Panel b: mean crossing rate and mean IoU per config.
  canvas.text(500, 28, "mean over seeds", 13);
  double bar_x = 500.0;
  for (const auto& s : r["summaries"]) {
    const int c = config_index(s);
    const double crossing = s["mean_crossing_rate"].get<double>();
    const double miou = s["mean_iou"].get<double>();
    const double bar_h = crossing * 150.0;
    canvas.rect(bar_x, 210.0 - bar_h, 40.0, bar_h, colors[c]);
    canvas.text(bar_x + 20, 206.0 - bar_h, fmt(crossing), 10, "#222222",
                "middle");
    canvas.text(bar_x + 20, 226, "iou", 9, "#666666", "middle");
    canvas.text(bar_x + 20, 238, fmt(miou), 10, "#222222", "middle");
    bar_x += 95.0;
  }
  canvas.line(500, 210, 880, 210, "#333333");
  canvas.text(500, 254, "bars: crossing rate of the top-1 moment", 10,
              "#666666");

  // Panel c: first video, first seed: pseudo-events, ground truth, and each
  // config's predicted slots.
  const json& fv = r["first_video"];
  const double horizon = fv["horizon"].get<double>();
  PanelScale tx{0.0, horizon, 70.0, 860.0};
  const double rows_top = 300.0, row_h = 34.0;
  canvas.text(70, rows_top - 10, "first video: pseudo-events, ground truth, predicted slots",
              13);
  for (const auto& ev : fv["events"]) {
    const double x = tx(ev[1].get<double>());
    canvas.line(x, rows_top, x, rows_top + row_h * 5.5, "#bbbbbb");
  }
  auto draw_span_row = [&](double y, const json& spans, const char* fill,
                           const std::string& label) {
    canvas.text(66, y + row_h * 0.65, label, 11, "#222222", "end");
    canvas.line(70, y + row_h * 0.5, 860, y + row_h * 0.5, "#eeeeee");
    for (const auto& sp : spans) {
      const double c = sp[0].get<double>();
      const double w = sp[1].get<double>();
      const double s = std::max(0.0, c - w / 2.0);
      const double e = std::min(horizon, c + w / 2.0);
      if (e <= s) continue;
      canvas.rect(tx(s), y + 6, tx(e) - tx(s), row_h - 12, fill, "#333333",
                  0.75);
    }
  };
  draw_span_row(rows_top, fv["gt"], "#111111", "gt");
  for (const auto& cell : r["cells"]) {
    if (!cell.contains("first_video_preds")) continue;
    const int c = config_index(cell);
    draw_span_row(rows_top + row_h * (1.2 + c), cell["first_video_preds"],
                  colors[c], names[c]);
  }

  // Legend.
  double lx = 70.0;
  for (int c = 0; c < 4; ++c) {
    canvas.rect(lx, height - 28, 14, 14, colors[c]);
    canvas.text(lx + 20, height - 16, names[c], 11);
    lx += 130.0;
  }
  return canvas.str();
}

/* ---- command option structs ---------------------------------------------*/

int run_cli(const std::vector<std::string>& args);  // forward, for rerun

struct CommonOpts {
  int threads = 1;
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt = nullptr;

  std::optional<std::uint64_t> seed() const {
    if (seed_opt != nullptr && seed_opt->count() > 0) return seed_value;
    return std::nullopt;
  }
};

void add_threads(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--threads", c.threads, "worker thread cap (default 1)")
      ->check(CLI::PositiveNumber);
}

void add_seed(CLI::App* cmd, CommonOpts& c) {
  c.seed_opt = cmd->add_option("--seed", c.seed_value,
                               "RNG seed (default: MF_SEED env var, then 0)");
}

std::vector<std::string> threads_argv(const CommonOpts& c) {
  return {"--threads", std::to_string(c.threads)};
}

void append(std::vector<std::string>& argv,
            std::initializer_list<std::string> items) {
  argv.insert(argv.end(), items);
}

/* ---- emb ----------------------------------------------------------------*/

struct EmbInfoOpts : CommonOpts {
  std::string in, format = "auto", out;
};

void cmd_emb_info(const EmbInfoOpts& o) {
  apply_threads(o.threads);
  const TablePtr t = load_table(o.in, parse_format(o.format));
  ordered_json doc;
  doc["count"] = vmr_table_count(t.get());
  doc["dim"] = vmr_table_dim(t.get());
  ordered_json labels = ordered_json::array();
  for (size_t i = 0; i < vmr_table_count(t.get()); ++i)
    labels.push_back(vmr_table_label(t.get(), i));
  doc["labels"] = labels;
  emit_report(doc.dump(2), o.out);
  if (!o.out.empty()) {
    std::vector<std::string> argv = {"emb", "info", "--in", o.in,
                                     "--format", o.format, "--out", o.out};
    append(argv, {"--threads", std::to_string(o.threads)});
    write_manifest("emb info", argv, std::nullopt, {o.in}, {o.out});
  }
}

struct EmbConvertOpts : CommonOpts {
  std::string in, out, in_format = "auto", out_format = "auto";
};

void cmd_emb_convert(const EmbConvertOpts& o) {
  apply_threads(o.threads);
  const TablePtr t = load_table(o.in, parse_format(o.in_format));
  check(vmr_table_save(t.get(), o.out.c_str(), parse_format(o.out_format)),
        "saving " + o.out);
  std::vector<std::string> argv = {"emb",         "convert",
                                   "--in",        o.in,
                                   "--in-format", o.in_format,
                                   "--out",       o.out,
                                   "--out-format", o.out_format};
  append(argv, {"--threads", std::to_string(o.threads)});
  write_manifest("emb convert", argv, std::nullopt, {o.in}, {o.out});
}

struct EmbNormalizeOpts : CommonOpts {
  std::string in, out, in_format = "auto", out_format = "auto";
};

void cmd_emb_normalize(const EmbNormalizeOpts& o) {
  apply_threads(o.threads);
  const TablePtr t = load_table(o.in, parse_format(o.in_format));
  vmr_table* normed = nullptr;
  check(vmr_table_normalize(t.get(), &normed), "normalizing " + o.in);
  const TablePtr n(normed);
  check(vmr_table_save(n.get(), o.out.c_str(), parse_format(o.out_format)),
        "saving " + o.out);
  std::vector<std::string> argv = {"emb",         "normalize",
                                   "--in",        o.in,
                                   "--in-format", o.in_format,
                                   "--out",       o.out,
                                   "--out-format", o.out_format};
  append(argv, {"--threads", std::to_string(o.threads)});
  write_manifest("emb normalize", argv, std::nullopt, {o.in}, {o.out});
}

struct EmbSimOpts : CommonOpts {
  std::string in, out, format = "auto";
  bool normalize = false;
};

void cmd_emb_sim(const EmbSimOpts& o) {
  apply_threads(o.threads);
  TablePtr t = load_table(o.in, parse_format(o.format));
  if (o.normalize) {
    vmr_table* normed = nullptr;
    check(vmr_table_normalize(t.get(), &normed), "normalizing " + o.in);
    t.reset(normed);
  }
  const size_t n = vmr_table_count(t.get());
  std::vector<double> sim(n * n);
  check(vmr_table_similarity(t.get(), sim.data()),
        "similarity of " + o.in +
            (o.normalize ? "" : " (rows must be unit norm; see --normalize)"));
  std::string csv;
  for (size_t i = 0; i < n; ++i) {
    csv += vmr_table_label(t.get(), i);
    for (size_t j = 0; j < n; ++j) csv += "," + fmt(sim[i * n + j]);
    csv += "\n";
  }
  if (o.out.empty()) {
    std::cout << csv;
    return;
  }
  write_file(o.out, csv);
  std::vector<std::string> argv = {"emb",      "sim",    "--in", o.in,
                                   "--format", o.format, "--out", o.out};
  if (o.normalize) argv.push_back("--normalize");
  append(argv, {"--threads", std::to_string(o.threads)});
  write_manifest("emb sim", argv, std::nullopt, {o.in}, {o.out});
}

/* ---- triplets -----------------------------------------------------------*/

struct TripGenOpts : CommonOpts {
  std::string triplets, out;
  std::size_t dim = 64;
  double unreasonable_frac = 0.3;
};

void cmd_trip_gen(const TripGenOpts& o) {
  apply_threads(o.threads);
  const std::uint64_t seed = resolve_seed(o.seed());
  vmr_table* t = nullptr;
  check(vmr_make_triplet_geometry(o.triplets.c_str(), o.dim,
                                  o.unreasonable_frac, seed, &t),
        "generating embeddings for " + o.triplets);
  const TablePtr table(t);
  check(vmr_table_save(table.get(), o.out.c_str(), VMR_FORMAT_AUTO),
        "saving " + o.out);
  std::vector<std::string> argv = {"triplets",
                                   "gen-embeddings",
                                   "--triplets",
                                   o.triplets,
                                   "--dim",
                                   std::to_string(o.dim),
                                   "--unreasonable-frac",
                                   fmt(o.unreasonable_frac),
                                   "--seed",
                                   std::to_string(seed),
                                   "--out",
                                   o.out};
  append(argv, {"--threads", std::to_string(o.threads)});
  write_manifest("triplets gen-embeddings", argv, seed, {o.triplets}, {o.out});
}

struct TripStudyOpts : CommonOpts {
  std::string emb, triplets, refiner = "identity";
  std::string alphas = "0,0.25,0.5", ps = "0,0.3,0.5";
  std::string out, json_out;
};

void cmd_trip_study(const TripStudyOpts& o) {
  apply_threads(o.threads);
  const std::uint64_t seed = resolve_seed(o.seed());
  const std::vector<double> alphas = parse_doubles(o.alphas, "--alphas");
  const std::vector<double> ps = parse_doubles(o.ps, "--ps");
  const TablePtr text = load_table(o.emb, VMR_FORMAT_AUTO);
  char* raw = nullptr;
  check(vmr_refine_study(text.get(), o.triplets.c_str(), o.refiner.c_str(),
                         alphas.data(), alphas.size(), ps.data(), ps.size(),
                         seed, &raw),
        "refine study");
  const json report = json::parse(take_string(raw));

  std::string csv =
      "alpha,p,n_triplets,n_unreasonable_before,n_improved,n_deteriorated,"
      "improved_proportion,deteriorated_proportion\n";
  for (const auto& c : report["cells"]) {
    csv += fmt(c["alpha"].get<double>()) + "," + fmt(c["p"].get<double>()) +
           "," + std::to_string(c["n_triplets"].get<std::size_t>()) + "," +
           std::to_string(c["n_unreasonable_before"].get<std::size_t>()) +
           "," + std::to_string(c["n_improved"].get<std::size_t>()) + "," +
           std::to_string(c["n_deteriorated"].get<std::size_t>()) + "," +
           fmt(c["improved_proportion"].get<double>()) + "," +
           fmt(c["deteriorated_proportion"].get<double>()) + "\n";
  }
  if (o.out.empty() && o.json_out.empty()) {
    std::cout << csv;
    return;
  }
  std::vector<std::string> outputs;
  if (!o.out.empty()) {
    write_file(o.out, csv);
    outputs.push_back(o.out);
  }
  if (!o.json_out.empty()) {
    write_file(o.json_out, report.dump(2) + "\n");
    outputs.push_back(o.json_out);
  }
  std::vector<std::string> argv = {
      "triplets", "study",    "--emb",    o.emb,     "--triplets", o.triplets,
      "--refiner", o.refiner, "--alphas", o.alphas,  "--ps",       o.ps,
      "--seed",   std::to_string(seed)};
  if (!o.out.empty()) append(argv, {"--out", o.out});
  if (!o.json_out.empty()) append(argv, {"--json", o.json_out});
  append(argv, {"--threads", std::to_string(o.threads)});
  write_manifest("triplets study", argv, seed, {o.emb, o.triplets}, outputs);
}

struct TripScalingOpts : CommonOpts {
  std::size_t dim = 256;
  std::string alphas = "0.1,0.25,0.5,0.75,0.9";
  std::size_t n_pairs = 100000;
  double rho = 0.5;
  std::string out;
};

void cmd_trip_scaling(const TripScalingOpts& o) {
  apply_threads(o.threads);
  const std::uint64_t seed = resolve_seed(o.seed());
  const std::vector<double> alphas = parse_doubles(o.alphas, "--alphas");
  char* raw = nullptr;
  check(vmr_scaling_curve(o.dim, alphas.data(), alphas.size(), o.n_pairs,
                          seed, o.rho, &raw),
        "scaling check");
  const json curve = json::parse(take_string(raw));
  std::string csv =
      "alpha,predicted,empirical_ratio,relative_error,mean_base,mean_fused\n";
  for (const auto& c : curve["cells"]) {
    const double predicted = c["predicted"].get<double>();
    const double ratio = c["empirical_ratio"].get<double>();
    const double rel =
        predicted == 0.0 ? 0.0 : std::abs(ratio - predicted) / predicted;
    csv += fmt(c["alpha"].get<double>()) + "," + fmt(predicted) + "," +
           fmt(ratio) + "," + fmt(rel) + "," +
           fmt(c["mean_base"].get<double>()) + "," +
           fmt(c["mean_fused"].get<double>()) + "\n";
  }
  if (o.out.empty()) {
    std::cout << csv;
    return;
  }
  write_file(o.out, csv);
  std::vector<std::string> argv = {"triplets",
                                   "scaling",
                                   "--dim",
                                   std::to_string(o.dim),
                                   "--alphas",
                                   o.alphas,
                                   "--n-pairs",
                                   std::to_string(o.n_pairs),
                                   "--rho",
                                   fmt(o.rho),
                                   "--seed",
                                   std::to_string(seed),
                                   "--out",
                                   o.out};
  append(argv, {"--threads", std::to_string(o.threads)});
  write_manifest("triplets scaling", argv, seed, {}, {o.out});
}

/* ---- events -------------------------------------------------------------*/

struct EventsOpts : CommonOpts {
  std::string features, video_id, out, svg_out, format = "auto";
  double frame_period = 1.0;
  int kernel_half = 4;
  int min_event_len = 2;
  double threshold = 0.05;
  int max_depth = 8;
};

void cmd_events_detect(const EventsOpts& o) {
  apply_threads(o.threads);
  const std::string video_id =
      o.video_id.empty()
          ? std::filesystem::path(o.features).stem().string()
          : o.video_id;
  char* raw = nullptr;
  check(vmr_detect_events_file(o.features.c_str(), parse_format(o.format),
                               video_id.c_str(), o.frame_period,
                               o.kernel_half, o.min_event_len, o.threshold,
                               o.max_depth, o.out.empty() ? nullptr
                                                          : o.out.c_str(),
                               &raw),
        "detecting events in " + o.features);
  const json report = json::parse(take_string(raw));
  if (o.out.empty())
    std::cout << report.dump() << "\n";
  if (!o.svg_out.empty())
    write_file(o.svg_out, events_figure(report, o.threshold));
  if (o.out.empty()) return;

  std::vector<std::string> outputs = {o.out};
  if (!o.svg_out.empty()) outputs.push_back(o.svg_out);
  std::vector<std::string> argv = {"events",
                                   "detect",
                                   "--features",
                                   o.features,
                                   "--format",
                                   o.format,
                                   "--video-id",
                                   video_id,
                                   "--frame-period",
                                   fmt(o.frame_period),
                                   "--kernel-half",
                                   std::to_string(o.kernel_half),
                                   "--min-event-len",
                                   std::to_string(o.min_event_len),
                                   "--threshold",
                                   fmt(o.threshold),
                                   "--max-depth",
                                   std::to_string(o.max_depth),
                                   "--out",
                                   o.out};
  if (!o.svg_out.empty()) append(argv, {"--svg", o.svg_out});
  append(argv, {"--threads", std::to_string(o.threads)});
  write_manifest("events detect", argv, std::nullopt, {o.features}, outputs);
}

/* ---- loss ---------------------------------------------------------------*/

struct LossEvalOpts : CommonOpts {
  std::string request, request_json, out;
};

void cmd_loss_eval(const LossEvalOpts& o) {
  apply_threads(o.threads);
  if (o.request.empty() == o.request_json.empty())
    die(1, "pass exactly one of --request or --request-json");
  const std::string request =
      o.request.empty() ? o.request_json : read_file(o.request);
  char* raw = nullptr;
  check(vmr_loss_eval_json(request.c_str(), &raw), "loss eval");
  const std::string report = take_string(raw);
  emit_report(json::parse(report).dump(2), o.out);
  if (o.out.empty()) return;
  std::vector<std::string> argv = {"loss", "eval", "--request-json", request,
                                   "--out", o.out};
  append(argv, {"--threads", std::to_string(o.threads)});
  write_manifest("loss eval", argv, std::nullopt,
                 o.request.empty() ? std::vector<std::string>{}
                                   : std::vector<std::string>{o.request},
                 {o.out});
}

struct GradcheckOpts : CommonOpts {
  std::size_t points = 1000;
  double tol = 1e-4;
  std::string out;
};

void cmd_loss_gradcheck(const GradcheckOpts& o) {
  apply_threads(o.threads);
  const std::uint64_t seed = resolve_seed(o.seed());
  char* raw = nullptr;
  check(vmr_gradcheck_suite(seed, o.points, o.tol, &raw), "gradcheck");
  const json report = json::parse(take_string(raw));

  std::ostringstream table;
  table << "loss                 max_rel_err   checked   skipped\n";
  for (const auto& c : report["checks"]) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-20s %-13.3e %-9zu %zu\n",
                  c["name"].get<std::string>().c_str(),
                  c["max_rel_err"].get<double>(),
                  c["n_checked"].get<std::size_t>(),
                  c["n_skipped"].get<std::size_t>());
    table << line;
  }
  table << (report["passed"].get<bool>() ? "passed" : "FAILED")
        << " (tolerance " << fmt(o.tol) << ", seed " << seed << ")\n";
  std::cout << table.str();

  if (!o.out.empty()) {
    write_file(o.out, report.dump(2) + "\n");
    std::vector<std::string> argv = {
        "loss",   "gradcheck",           "--points", std::to_string(o.points),
        "--tol",  fmt(o.tol),            "--seed",   std::to_string(seed),
        "--out",  o.out};
    append(argv, {"--threads", std::to_string(o.threads)});
    write_manifest("loss gradcheck", argv, seed, {}, {o.out});
  }
  if (!report["passed"].get<bool>())
    die(3, "gradient check failed (max relative error above tolerance)");
}

/* ---- eval ---------------------------------------------------------------*/

struct EvalMrOpts : CommonOpts {
  std::string preds, gts, out;
};

void cmd_eval_mr(const EvalMrOpts& o) {
  apply_threads(o.threads);
  char* raw = nullptr;
  check(vmr_eval_mr_files(o.preds.c_str(), o.gts.c_str(), &raw), "eval mr");
  emit_report(json::parse(take_string(raw)).dump(2), o.out);
  if (o.out.empty()) return;
  std::vector<std::string> argv = {"eval",  "mr",  "--preds", o.preds,
                                   "--gts", o.gts, "--out",   o.out};
  append(argv, {"--threads", std::to_string(o.threads)});
  write_manifest("eval mr", argv, std::nullopt, {o.preds, o.gts}, {o.out});
}

struct EvalHdOpts : CommonOpts {
  std::string annotations, out;
};

void cmd_eval_hd(const EvalHdOpts& o) {
  apply_threads(o.threads);
  char* raw = nullptr;
  check(vmr_eval_hd_file(o.annotations.c_str(), &raw), "eval hd");
  emit_report(json::parse(take_string(raw)).dump(2), o.out);
  if (o.out.empty()) return;
  std::vector<std::string> argv = {"eval", "hd", "--annotations",
                                   o.annotations, "--out", o.out};
  append(argv, {"--threads", std::to_string(o.threads)});
  write_manifest("eval hd", argv, std::nullopt, {o.annotations}, {o.out});
}

/* ---- synth --------------------------------------------------------------*/

struct SynthOpts : CommonOpts {
  std::string config, config_json, seeds, out, curves, svg_out;
  std::size_t epochs_value = 0;
  CLI::Option* epochs_opt = nullptr;
};

void cmd_synth_run(const SynthOpts& o) {
  apply_threads(o.threads);
  if (!o.config.empty() && !o.config_json.empty())
    die(1, "pass at most one of --config or --config-json");
  json cfg = json::object();
  if (!o.config.empty() || !o.config_json.empty()) {
    const std::string text =
        o.config.empty() ? o.config_json : read_file(o.config);
    cfg = json::parse(text, nullptr, false);
    if (cfg.is_discarded() || !cfg.is_object())
      die(1, "config must be a JSON object");
  }
  if (!o.seeds.empty()) cfg["seeds"] = parse_seed_list(o.seeds);
  if (o.epochs_opt != nullptr && o.epochs_opt->count() > 0)
    cfg["epochs"] = o.epochs_value;

  char* raw = nullptr;
  check(vmr_synth_ablation(cfg.dump().c_str(), &raw), "synth run");
  const json report = json::parse(take_string(raw));

  if (o.out.empty() && o.curves.empty() && o.svg_out.empty()) {
    std::cout << report["summaries"].dump(2) << "\n";
    return;
  }
  std::vector<std::string> outputs;
  if (!o.out.empty()) {
    write_file(o.out, report.dump(2) + "\n");
    outputs.push_back(o.out);
  }
  if (!o.curves.empty()) {
    std::string csv = "use_evt,use_pos,seed,epoch,loss\n";
    for (const auto& cell : report["cells"]) {
      const std::string prefix =
          std::string(cell["use_evt"].get<bool>() ? "1" : "0") + "," +
          (cell["use_pos"].get<bool>() ? "1" : "0") + "," +
          std::to_string(cell["seed"].get<std::uint64_t>()) + ",";
      const auto& curve = cell["loss_curve"];
      for (std::size_t e = 0; e < curve.size(); ++e)
        csv += prefix + std::to_string(e) + "," +
               fmt(curve[e].get<double>()) + "\n";
    }
    write_file(o.curves, csv);
    outputs.push_back(o.curves);
  }
  if (!o.svg_out.empty()) {
    write_file(o.svg_out, synth_figure(report));
    outputs.push_back(o.svg_out);
  }

  // The manifest embeds the fully resolved config so a rerun needs no other
  // state.
  std::vector<std::string> argv = {"synth", "run", "--config-json",
                                   report["config"].dump()};
  if (!o.out.empty()) append(argv, {"--out", o.out});
  if (!o.curves.empty()) append(argv, {"--curves", o.curves});
  if (!o.svg_out.empty()) append(argv, {"--svg", o.svg_out});
  append(argv, {"--threads", std::to_string(o.threads)});
  write_manifest("synth run", argv, std::nullopt,
                 o.config.empty() ? std::vector<std::string>{}
                                  : std::vector<std::string>{o.config},
                 outputs);
}

/* ---- rerun --------------------------------------------------------------*/

struct RerunOpts {
  std::string manifest;
};

void cmd_rerun(const RerunOpts& o) {
  const json m = json::parse(read_file(o.manifest), nullptr, false);
  if (m.is_discarded() || !m.is_object() || !m.contains("argv") ||
      !m["argv"].is_array())
    die(1, o.manifest + " is not a run manifest");
  std::vector<std::string> argv;
  for (const auto& a : m["argv"]) {
    if (!a.is_string()) die(1, o.manifest + " has a non-string argv entry");
    argv.push_back(a.get<std::string>());
  }
  const int rc = run_cli(argv);
  if (rc != 0) die(rc, "rerun of " + o.manifest + " failed");
}

/* ---- wiring -------------------------------------------------------------*/

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"span losses, pseudo-event detection, retrieval metrics and "
               "embedding feasibility studies"};
  app.set_version_flag("--version", std::string(vmr_version()));
  app.require_subcommand(1);

  // emb
  CLI::App* emb = app.add_subcommand("emb", "embedding table utilities");
  emb->require_subcommand(1);
  {
    auto o = std::make_shared<EmbInfoOpts>();
    CLI::App* c = emb->add_subcommand("info", "describe a table");
    c->add_option("--in", o->in, "table file")->required()
        ->check(CLI::ExistingFile);
    c->add_option("--format", o->format, "auto|binary|csv");
    c->add_option("--out", o->out, "write the JSON summary here");
    add_threads(c, *o);
    c->callback([o] { cmd_emb_info(*o); });
  }
  {
    auto o = std::make_shared<EmbConvertOpts>();
    CLI::App* c = emb->add_subcommand("convert", "convert between formats");
    c->add_option("--in", o->in, "input table")->required()
        ->check(CLI::ExistingFile);
    c->add_option("--out", o->out, "output table")->required();
    c->add_option("--in-format", o->in_format, "auto|binary|csv");
    c->add_option("--out-format", o->out_format, "auto|binary|csv");
    add_threads(c, *o);
    c->callback([o] { cmd_emb_convert(*o); });
  }
  {
    auto o = std::make_shared<EmbNormalizeOpts>();
    CLI::App* c = emb->add_subcommand("normalize", "rescale rows to unit norm");
    c->add_option("--in", o->in, "input table")->required()
        ->check(CLI::ExistingFile);
    c->add_option("--out", o->out, "output table")->required();
    c->add_option("--in-format", o->in_format, "auto|binary|csv");
    c->add_option("--out-format", o->out_format, "auto|binary|csv");
    add_threads(c, *o);
    c->callback([o] { cmd_emb_normalize(*o); });
  }
  {
    auto o = std::make_shared<EmbSimOpts>();
    CLI::App* c = emb->add_subcommand("sim", "pairwise cosine matrix as CSV");
    c->add_option("--in", o->in, "table file")->required()
        ->check(CLI::ExistingFile);
    c->add_option("--format", o->format, "auto|binary|csv");
    c->add_flag("--normalize", o->normalize, "normalize rows first");
    c->add_option("--out", o->out, "write the CSV here");
    add_threads(c, *o);
    c->callback([o] { cmd_emb_sim(*o); });
  }

  // triplets
  CLI::App* trip =
      app.add_subcommand("triplets", "relation feasibility studies");
  trip->require_subcommand(1);
  {
    auto o = std::make_shared<TripGenOpts>();
    CLI::App* c = trip->add_subcommand(
        "gen-embeddings", "synthesize embeddings for a triplet fixture");
    c->add_option("--triplets", o->triplets, "triplet JSON file")->required()
        ->check(CLI::ExistingFile);
    c->add_option("--dim", o->dim, "embedding dimension (default 64)");
    c->add_option("--unreasonable-frac", o->unreasonable_frac,
                  "fraction of unreasonable triplets (default 0.3)");
    c->add_option("--out", o->out, "output table")->required();
    add_seed(c, *o);
    add_threads(c, *o);
    c->callback([o] { cmd_trip_gen(*o); });
  }
  {
    auto o = std::make_shared<TripStudyOpts>();
    CLI::App* c = trip->add_subcommand(
        "study", "distortion/fusion/refinement grid over alphas x ps");
    c->add_option("--emb", o->emb, "text embedding table")->required()
        ->check(CLI::ExistingFile);
    c->add_option("--triplets", o->triplets, "triplet JSON file")->required()
        ->check(CLI::ExistingFile);
    c->add_option("--refiner", o->refiner,
                  "identity | toy:<weights.json> | toy-random:<seed>[:<n>] | "
                  "external:<command>");
    c->add_option("--alphas", o->alphas, "comma-separated fusion weights");
    c->add_option("--ps", o->ps, "comma-separated distortion probabilities");
    c->add_option("--out", o->out, "write the CSV grid here");
    c->add_option("--json", o->json_out, "also write the full JSON report");
    add_seed(c, *o);
    add_threads(c, *o);
    c->callback([o] { cmd_trip_study(*o); });
  }
  {
    auto o = std::make_shared<TripScalingOpts>();
    CLI::App* c = trip->add_subcommand(
        "scaling", "monte-carlo check of the fused-similarity scaling law");
    c->add_option("--dim", o->dim, "embedding dimension (default 256)");
    c->add_option("--alphas", o->alphas, "comma-separated fusion weights");
    c->add_option("--n-pairs", o->n_pairs, "samples per alpha (default 1e5)");
    c->add_option("--rho", o->rho, "paired-concept correlation (default 0.5)");
    c->add_option("--out", o->out, "write the CSV here");
    add_seed(c, *o);
    add_threads(c, *o);
    c->callback([o] { cmd_trip_scaling(*o); });
  }

  // events
  CLI::App* events =
      app.add_subcommand("events", "pseudo-event boundary detection");
  events->require_subcommand(1);
  {
    auto o = std::make_shared<EventsOpts>();
    CLI::App* c = events->add_subcommand(
        "detect", "detect the event partition of one video");
    c->add_option("--features", o->features,
                  "frame features as a table (rows are frames)")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--format", o->format, "auto|binary|csv");
    c->add_option("--video-id", o->video_id,
                  "video id for the output (default: file stem)");
    c->add_option("--frame-period", o->frame_period,
                  "seconds per frame (default 1)");
    c->add_option("--kernel-half", o->kernel_half,
                  "boundary kernel half-width (default 4)");
    c->add_option("--min-event-len", o->min_event_len,
                  "minimum event length in frames (default 2)");
    c->add_option("--threshold", o->threshold,
                  "boundary score threshold (default 0.05)");
    c->add_option("--max-depth", o->max_depth,
                  "maximum bisection depth (default 8)");
    c->add_option("--out", o->out, "write one JSONL line here");
    c->add_option("--svg", o->svg_out, "also render a figure");
    add_threads(c, *o);
    c->callback([o] { cmd_events_detect(*o); });
  }

  // loss
  CLI::App* loss = app.add_subcommand("loss", "span losses and verification");
  loss->require_subcommand(1);
  {
    auto o = std::make_shared<LossEvalOpts>();
    CLI::App* c = loss->add_subcommand(
        "eval", "evaluate the combined loss for a JSON request");
    c->add_option("--request", o->request, "request JSON file")
        ->check(CLI::ExistingFile);
    c->add_option("--request-json", o->request_json,
                  "request JSON given inline");
    c->add_option("--out", o->out, "write the report here");
    add_threads(c, *o);
    c->callback([o] { cmd_loss_eval(*o); });
  }
  {
    auto o = std::make_shared<GradcheckOpts>();
    CLI::App* c = loss->add_subcommand(
        "gradcheck", "verify analytic gradients against finite differences");
    c->add_option("--points", o->points, "random points per loss (default 1000)");
    c->add_option("--tol", o->tol, "relative-error tolerance (default 1e-4)");
    c->add_option("--out", o->out, "write the JSON report here");
    add_seed(c, *o);
    add_threads(c, *o);
    c->callback([o] { cmd_loss_gradcheck(*o); });
  }

  // eval
  CLI::App* ev = app.add_subcommand("eval", "retrieval metrics");
  ev->require_subcommand(1);
  {
    auto o = std::make_shared<EvalMrOpts>();
    CLI::App* c = ev->add_subcommand("mr", "moment-retrieval metrics");
    c->add_option("--preds", o->preds, "predictions JSONL")->required()
        ->check(CLI::ExistingFile);
    c->add_option("--gts", o->gts, "ground-truth JSONL")->required()
        ->check(CLI::ExistingFile);
    c->add_option("--out", o->out, "write the report here");
    add_threads(c, *o);
    c->callback([o] { cmd_eval_mr(*o); });
  }
  {
    auto o = std::make_shared<EvalHdOpts>();
    CLI::App* c = ev->add_subcommand("hd", "highlight-detection metrics");
    c->add_option("--annotations", o->annotations,
                  "clip labels and scores JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--out", o->out, "write the report here");
    add_threads(c, *o);
    c->callback([o] { cmd_eval_hd(*o); });
  }

  // synth
  CLI::App* synth =
      app.add_subcommand("synth", "synthetic end-to-end experiment");
  synth->require_subcommand(1);
  {
    auto o = std::make_shared<SynthOpts>();
    CLI::App* c = synth->add_subcommand(
        "run", "train the toy predictor across the regulation-ablation grid");
    c->add_option("--config", o->config, "config JSON file")
        ->check(CLI::ExistingFile);
    c->add_option("--config-json", o->config_json, "config JSON given inline");
    c->add_option("--seeds", o->seeds, "comma-separated seed list");
    o->epochs_opt =
        c->add_option("--epochs", o->epochs_value, "override training epochs");
    c->add_option("--out", o->out, "write the full JSON report here");
    c->add_option("--curves", o->curves, "write per-epoch losses as CSV");
    c->add_option("--svg", o->svg_out, "render the summary figure");
    add_threads(c, *o);
    c->callback([o] { cmd_synth_run(*o); });
  }

  // rerun
  {
    auto o = std::make_shared<RerunOpts>();
    CLI::App* c = app.add_subcommand(
        "rerun", "re-execute a run from its manifest");
    c->add_option("manifest", o->manifest, "path to a .manifest.json file")
        ->required()
        ->check(CLI::ExistingFile);
    c->callback([o] { cmd_rerun(*o); });
  }

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("vmrtk");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (dynamic_cast<const CLI::CallForHelp*>(&e) != nullptr ||
        dynamic_cast<const CLI::CallForAllHelp*>(&e) != nullptr ||
        dynamic_cast<const CLI::CallForVersion*>(&e) != nullptr)
      return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_cli(args);
  } catch (const ExitError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
