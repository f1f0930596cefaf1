// Copyright 2026 The MAPSS Authors
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

#include "pipeline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "common/wav.hpp"
#include "manifold/manifold.hpp"
#include "measures/measures.hpp"
#include "preprocess/loudness.hpp"

namespace mapss {
namespace {

using nlohmann::json;

constexpr std::size_t kBatch = 32;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

[[noreturn]] void rethrow_with(const std::string& ctx) {
  try {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), ctx + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kInternal, ctx + ": " + e.what());
  }
}

std::string fmt_ms(double ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", ms);
  return buf;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const EmbeddingMatrix& m, std::size_t slot, bool with_reference) {
  const std::size_t np = m.n_p;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(np + (with_reference ? 1 : 0)), x.cols());
  Eigen::Index r = 0;
  if (with_reference) out.row(r++) = x.row(static_cast<Eigen::Index>(m.row_of(slot, ItemKind::kReference)));
  for (std::size_t p = 1; p <= np; ++p) out.row(r++) = x.row(static_cast<Eigen::Index>(m.row_of(slot, ItemKind::kDistortion, p)));
  return out;
}

struct Manifold {
  Eigen::MatrixXd coords;  // every retained dimension
  std::size_t d = 0;
  std::size_t dim = 0;
};

Manifold diffuse(const EmbeddingMatrix& m, const MeasureSettings& s, json* spectrum) {
  validate_embedding(m);
  const DiffusionGraph g = build_graph(m.vectors, s.alpha);
  const SpectralEmbedding se = decompose(g, s.t, s.tau);
  if (spectrum) *spectrum = spectrum_json(g, se);
  return {embed_all(se, se.full_dim()), se.d, se.full_dim()};
}

Utterance load(const std::filesystem::path& p, Role role, int source) {
  try {
    WavData w = read_wav(p);
    Utterance u{std::move(w.samples), w.sample_rate, role, source};
    check_utterance(u);
    return u;
  } catch (...) {
    rethrow_with(p.string());
  }
}

DistortionBank trial_bank(const RunConfig& cfg, const TrialSpec& t, int source, MeasureVariant v, int fs) {
  const CounterRng root(CounterRng(cfg.seed).split(fnv1a(t.id))());
  const auto stream = 2 * static_cast<std::uint64_t>(source) + (v == MeasureVariant::kPM ? 1 : 0);
  return make_bank(v, fs, root.split(stream)(), v == MeasureVariant::kPS ? cfg.ps.bank : cfg.pm.bank);
}

struct PreparedTrial {
  const TrialSpec* spec = nullptr;
  int sample_rate = 0;
  std::vector<int> ids;  // slot -> source id
  std::vector<Utterance> refs;
  std::vector<std::vector<Utterance>> ps_bank, pm_bank;
  FramePlan plan;
};

PreparedTrial prepare_trial(const RunConfig& cfg, const TrialSpec& t) {
  PreparedTrial p;
  p.spec = &t;
  for (const auto& [id, path] : t.references) {
    Utterance u = load(path, Role::kReference, id);
    if (p.refs.empty()) p.sample_rate = u.sample_rate;
    require(u.sample_rate == p.sample_rate, ErrorCode::kInvalidArgument,
            "trial " + t.id + ": references differ in sample rate");
    try {
      u = normalize_loudness(u, cfg.target_lufs);
    } catch (...) {
      rethrow_with("trial " + t.id + " reference " + std::to_string(id));
    }
    p.ids.push_back(id);
    p.refs.push_back(std::move(u));
  }
  try {
    p.plan = detect_overlap_frames(p.refs, cfg.plan);
  } catch (...) {
    rethrow_with("trial " + t.id);
  }
  if (cfg.encoder == Encoder::kRaw) {
    for (std::size_t s = 0; s < p.refs.size(); ++s) {
      const DistortionBank bps = trial_bank(cfg, t, p.ids[s], MeasureVariant::kPS, p.sample_rate);
      const DistortionBank bpm = trial_bank(cfg, t, p.ids[s], MeasureVariant::kPM, p.sample_rate);
      try {
        p.ps_bank.push_back(generate_bank(p.refs[s], bps));
        p.pm_bank.push_back(generate_bank(p.refs[s], bpm));
      } catch (...) {
        rethrow_with("trial " + t.id + " source " + std::to_string(p.ids[s]) + " distortion bank");
      }
    }
  }
  return p;
}

std::vector<Utterance> prepare_outputs(const RunConfig& cfg, const PreparedTrial& p, const std::string& system,
                                       double delay_ms) {
  std::vector<Utterance> outs;
  const auto& paths = p.spec->systems.at(system);
  for (std::size_t s = 0; s < p.ids.size(); ++s) {
    Utterance u = load(paths.at(p.ids[s]), Role::kOutput, p.ids[s]);
    const std::string ctx = "trial " + p.spec->id + " system " + system + " source " + std::to_string(p.ids[s]);
    require(u.sample_rate == p.sample_rate, ErrorCode::kInvalidArgument, ctx + ": sample rate differs from reference");
    u.samples.resize(p.refs[s].size(), 0.0);
    if (delay_ms > 0.0) {
      try {
        u = inject_delay(u, delay_ms);
      } catch (...) {
        rethrow_with(ctx);
      }
    }
    try {
      u = normalize_loudness(u, cfg.target_lufs);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSilentInput) rethrow_with(ctx);
    }
    outs.push_back(std::move(u));
  }
  return outs;
}

EmbeddingMatrix raw_set(const PreparedTrial& p, const std::vector<Utterance>& outs,
                        const std::vector<std::vector<Utterance>>& bank, std::size_t frame,
                        const std::vector<int>& active) {
  const std::size_t start = p.plan.frame_start(frame), len = p.plan.frame_length;
  std::vector<std::uint32_t> ids;
  std::vector<std::vector<double>> o, r;
  std::vector<std::vector<std::vector<double>>> d;
  for (int id : active) {
    const auto s = static_cast<std::size_t>(std::find(p.ids.begin(), p.ids.end(), id) - p.ids.begin());
    ids.push_back(static_cast<std::uint32_t>(id));
    o.push_back(encode_raw(slice_frame(outs[s], start, len)));
    r.push_back(encode_raw(slice_frame(p.refs[s], start, len)));
    d.emplace_back();
    for (const auto& u : bank[s]) d.back().push_back(encode_raw(slice_frame(u, start, len)));
  }
  return assemble_frame_set(static_cast<std::uint32_t>(frame), ids, o, r, d);
}

using FrameIndex = std::map<std::uint32_t, EmbeddingMatrix>;

FrameIndex load_file_set(const RunConfig& cfg, const std::string& trial, const std::string& system, const char* tag) {
  const auto path = cfg.embeddings / trial / (system + "." + tag + ".mapssemb");
  FrameIndex idx;
  try {
    for (auto& m : read_embedding_file(path)) {
      const std::uint32_t f = m.frame_index;
      require(idx.emplace(f, std::move(m)).second, ErrorCode::kFormatError, "repeated frame index");
    }
  } catch (...) {
    rethrow_with(path.string());
  }
  return idx;
}

const EmbeddingMatrix& file_set(const FrameIndex& idx, std::size_t frame, const std::vector<int>& active,
                                const char* tag) {
  auto it = idx.find(static_cast<std::uint32_t>(frame));
  require(it != idx.end(), ErrorCode::kFormatError,
          std::string(tag) + " embeddings lack active frame " + std::to_string(frame));
  std::vector<int> have;
  for (std::size_t s = 0; s < it->second.n_sources; ++s)
    have.push_back(static_cast<int>(it->second.labels[it->second.row_of(s, ItemKind::kOutput)].source_id));
  std::sort(have.begin(), have.end());
  require(have == active, ErrorCode::kFormatError,
          std::string(tag) + " embeddings of frame " + std::to_string(frame) + " hold a different source set");
  return it->second;
}

using Key = std::tuple<std::string, std::string, std::size_t>;

std::map<Key, std::vector<FrameRecord>> load_resume(const std::filesystem::path& path) {
  std::map<Key, std::vector<FrameRecord>> done;
  std::ifstream f(path);
  if (!f) return done;
  std::string line;
  while (std::getline(f, line)) {
    if (f.eof() && !line.empty()) break;  // no trailing newline: cut short
    try {
      const FrameRecord r = frame_record_from_json(json::parse(line));
      done[{r.trial, r.system, r.frame}].push_back(r);
    } catch (const std::exception&) {
      break;
    }
  }
  std::erase_if(done, [](const auto& kv) { return kv.second.size() != kv.second.front().active; });
  return done;
}

std::map<Key, std::string> load_spectra(const std::filesystem::path& path) {
  std::map<Key, std::string> done;
  std::ifstream f(path);
  if (!f) return done;
  std::string line;
  while (std::getline(f, line)) {
    if (f.eof() && !line.empty()) break;
    try {
      const json j = json::parse(line);
      done[{j.at("trial").get<std::string>(), j.at("system").get<std::string>(), j.at("frame").get<std::size_t>()}] =
          line;
    } catch (const std::exception&) {
      break;
    }
  }
  return done;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kIoError, "cannot write " + p.string());
  f << s;
}

std::pair<double, UtteranceBound> pool(const std::vector<double>& v, const std::vector<double>& radii,
                                       const std::vector<double>& hw, const AggregationConfig& agg, double conf) {
  double level = 0.0;
  const double value = agg.method == AggregationMethod::kPesq ? aggregate_pesq(v, agg, &level) : aggregate_average(v);
  return {value, propagate_utterance(radii, hw, conf, agg, level)};
}

std::string csv_num(double v) {
  if (!std::isfinite(v)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<MeasureFrame> score_ps_set(const EmbeddingMatrix& m, const MeasureSettings& s, const BoundConfig& b,
                                       json* spectrum) {
  const Manifold mf = diffuse(m, s, spectrum);
  const auto d = static_cast<Eigen::Index>(mf.d);
  const std::size_t n = m.n_sources;
  require(n >= 2, ErrorCode::kSingleSource, "PS needs at least two sources in the frame");
  std::vector<ClusterStatsPS> full, cut;
  std::vector<double> n_eff;
  for (std::size_t j = 0; j < n; ++j) {
    const Eigen::MatrixXd members = rows_of(mf.coords, m, j, true);
    full.push_back(cluster_stats_ps(members));
    cut.push_back({full.back().centroid.head(d), full.back().covariance.topLeftCorner(d, d), full.back().count});
    n_eff.push_back(effective_sample_size(members, b));
  }
  std::vector<MeasureFrame> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd y = mf.coords.row(static_cast<Eigen::Index>(m.row_of(i, ItemKind::kOutput))).transpose();
    const PsResult r = compute_ps(y.head(d), cut, i, b.eps);
    const PsBound pb = ps_frame_bound(y, full, i, r, mf.d, n_eff, b);
    MeasureFrame f;
    f.source = static_cast<int>(m.labels[m.row_of(i, ItemKind::kOutput)].source_id);
    f.value = std::clamp(r.ps, 0.0, 1.0);
    f.radius = pb.radius;
    f.half_width = pb.half_width;
    f.valid = std::isfinite(pb.radius) && std::isfinite(pb.half_width);
    f.nearest = static_cast<int>(m.labels[m.row_of(r.j_star, ItemKind::kOutput)].source_id);
    f.a = r.a;
    f.b = r.b;
    f.items = m.rows();
    f.d = mf.d;
    f.dim = mf.dim;
    out.push_back(f);
  }
  return out;
}

std::vector<MeasureFrame> score_pm_set(const EmbeddingMatrix& m, const MeasureSettings& s, const BoundConfig& b,
                                       json* spectrum) {
  const Manifold mf = diffuse(m, s, spectrum);
  const auto d = static_cast<Eigen::Index>(mf.d);
  std::vector<MeasureFrame> out;
  for (std::size_t i = 0; i < m.n_sources; ++i) {
    const Eigen::VectorXd ref = mf.coords.row(static_cast<Eigen::Index>(m.row_of(i, ItemKind::kReference))).transpose();
    const Eigen::VectorXd y = mf.coords.row(static_cast<Eigen::Index>(m.row_of(i, ItemKind::kOutput))).transpose();
    const Eigen::MatrixXd dist = rows_of(mf.coords, m, i, false);
    const ClusterStatsPM c = cluster_stats_pm(ref.head(d), dist.leftCols(d));
    const GammaFit fit = fit_gamma(c, dist.leftCols(d), b.eps);
    const double a_hat = mahalanobis_sq(y.head(d), ref.head(d), c.covariance, b.eps);
    const PmBound pb = pm_frame_bound(ref, dist, y, mf.d, fit, a_hat, b);
    MeasureFrame f;
    f.source = static_cast<int>(m.labels[m.row_of(i, ItemKind::kOutput)].source_id);
    f.value = std::clamp(compute_pm(fit, a_hat), 0.0, 1.0);
    f.radius = pb.radius;
    f.half_width = pb.half_width;
    f.valid = pb.valid;
    f.fallback = pb.gradient_fallback;
    f.a = a_hat;
    const KsResult ks = ks_gamma_diagnostic(fit, fit.distances);
    f.ks = ks.statistic;
    f.ks_pass = ks.pass;
    f.items = m.rows();
    f.d = mf.d;
    f.dim = mf.dim;
    out.push_back(f);
  }
  return out;
}

json frame_record_json(const FrameRecord& r) {
  return {{"trial", r.trial},
          {"system", r.system},
          {"frame", r.frame},
          {"time_s", r.time_s},
          {"active", r.active},
          {"source", r.source},
          {"ps", r.ps.value},
          {"ps_radius", r.ps.radius},
          {"ps_half_width", r.ps.half_width},
          {"ps_nearest", r.ps.nearest},
          {"ps_a", r.ps.a},
          {"ps_b", r.ps.b},
          {"ps_n", r.ps.items},
          {"ps_d", r.ps.d},
          {"ps_dim", r.ps.dim},
          {"pm", r.pm.value},
          {"pm_radius", r.pm.radius},
          {"pm_half_width", r.pm.half_width},
          {"pm_valid", r.pm.valid},
          {"pm_fallback", r.pm.fallback},
          {"pm_a_hat", r.pm.a},
          {"pm_ks", r.pm.ks},
          {"pm_ks_pass", r.pm.ks_pass},
          {"pm_n", r.pm.items},
          {"pm_d", r.pm.d},
          {"pm_dim", r.pm.dim}};
}

FrameRecord frame_record_from_json(const json& j) {
  FrameRecord r;
  try {
    r.trial = j.at("trial").get<std::string>();
    r.system = j.at("system").get<std::string>();
    r.frame = j.at("frame").get<std::size_t>();
    r.time_s = j.at("time_s").get<double>();
    r.active = j.at("active").get<std::size_t>();
    r.source = j.at("source").get<int>();
    r.ps.source = r.pm.source = r.source;
    r.ps.value = j.at("ps").get<double>();
    r.ps.radius = j.at("ps_radius").get<double>();
    r.ps.half_width = j.at("ps_half_width").get<double>();
    r.ps.nearest = j.at("ps_nearest").get<int>();
    r.ps.a = j.at("ps_a").get<double>();
    r.ps.b = j.at("ps_b").get<double>();
    r.ps.items = j.at("ps_n").get<std::size_t>();
    r.ps.d = j.at("ps_d").get<std::size_t>();
    r.ps.dim = j.at("ps_dim").get<std::size_t>();
    r.pm.value = j.at("pm").get<double>();
    r.pm.radius = j.at("pm_radius").get<double>();
    r.pm.half_width = j.at("pm_half_width").get<double>();
    r.pm.valid = j.at("pm_valid").get<bool>();
    r.pm.fallback = j.at("pm_fallback").get<bool>();
    r.pm.a = j.at("pm_a_hat").get<double>();
    r.pm.ks = j.at("pm_ks").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("pm_ks").get<double>();
    r.pm.ks_pass = j.at("pm_ks_pass").get<bool>();
    r.pm.items = j.at("pm_n").get<std::size_t>();
    r.pm.d = j.at("pm_d").get<std::size_t>();
    r.pm.dim = j.at("pm_dim").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormatError, std::string("bad frame record: ") + e.what());
  }
  return r;
}

RunSummary run_evaluation(const RunConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  require(!cfg.trials.empty(), ErrorCode::kConfigError, "config lists no trials");
  require(opt.delay_ms == 0.0 || cfg.encoder == Encoder::kRaw, ErrorCode::kConfigError,
          "delays need the raw encoder");
  auto log = [&](const std::string& s) {
    if (opt.log) opt.log(s);
  };
  std::filesystem::create_directories(cfg.output_dir);
  const auto jsonl = cfg.output_dir / "frames.jsonl";

  RunSummary sum;
  sum.output_dir = cfg.output_dir;
  std::map<Key, std::vector<FrameRecord>> resumed;
  const auto spectra_path = cfg.output_dir / "spectra.jsonl";
  std::map<Key, std::string> spectra_done;
  if (opt.resume) {
    resumed = load_resume(jsonl);
    if (cfg.spectra) {
      spectra_done = load_spectra(spectra_path);
      std::erase_if(resumed, [&](const auto& kv) { return !spectra_done.count(kv.first); });
    }
  }

  std::ofstream out(jsonl, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + jsonl.string());
  std::ofstream spectra_out;
  if (cfg.spectra) {
    spectra_out.open(spectra_path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(spectra_out), ErrorCode::kIoError, "cannot write " + spectra_path.string());
  }
  const std::size_t workers =
      std::max<std::size_t>(1, cfg.workers ? cfg.workers : std::thread::hardware_concurrency());

  std::vector<FrameRecord> all;
  for (const auto& trial : cfg.trials) {
    const PreparedTrial p = prepare_trial(cfg, trial);
    log("trial " + trial.id + ": " + std::to_string(p.plan.active_frames.size()) + " of " +
        std::to_string(p.plan.total_frames) + " frames have two or more active sources");
    for (const auto& [system, paths] : trial.systems) {
      const std::vector<Utterance> outs = prepare_outputs(cfg, p, system, opt.delay_ms);
      FrameIndex ps_file, pm_file;
      if (cfg.encoder == Encoder::kFile) {
        ps_file = load_file_set(cfg, trial.id, system, "ps");
        pm_file = load_file_set(cfg, trial.id, system, "pm");
      }
      const std::size_t nf = p.plan.active_frames.size();
      std::size_t fresh = 0;
      for (std::size_t b0 = 0; b0 < nf; b0 += kBatch) {
        const std::size_t b1 = std::min(nf, b0 + kBatch);
        std::vector<std::vector<FrameRecord>> rec(b1 - b0);
        std::vector<std::string> spec(b1 - b0);
        std::vector<std::exception_ptr> err(b1 - b0);
        std::atomic<std::size_t> next{b0};
        auto work = [&] {
          for (std::size_t k; (k = next.fetch_add(1)) < b1;) {
            const std::size_t frame = p.plan.active_frames[k];
            const auto& active = p.plan.active_sources[k];
            auto it = resumed.find({trial.id, system, frame});
            if (it != resumed.end()) {
              rec[k - b0] = it->second;
              if (cfg.spectra) spec[k - b0] = spectra_done.at(it->first);
              continue;
            }
            try {
              std::vector<MeasureFrame> ps, pm;
              json sps, spm;
              json* want_ps = cfg.spectra ? &sps : nullptr;
              json* want_pm = cfg.spectra ? &spm : nullptr;
              if (cfg.encoder == Encoder::kRaw) {
                ps = score_ps_set(raw_set(p, outs, p.ps_bank, frame, active), cfg.ps, cfg.bounds, want_ps);
                pm = score_pm_set(raw_set(p, outs, p.pm_bank, frame, active), cfg.pm, cfg.bounds, want_pm);
              } else {
                ps = score_ps_set(file_set(ps_file, frame, active, "PS"), cfg.ps, cfg.bounds, want_ps);
                pm = score_pm_set(file_set(pm_file, frame, active, "PM"), cfg.pm, cfg.bounds, want_pm);
              }
              if (cfg.spectra)
                spec[k - b0] = json{{"trial", trial.id}, {"system", system}, {"frame", frame}, {"ps", sps}, {"pm", spm}}
                                   .dump();
              for (std::size_t s = 0; s < ps.size(); ++s) {
                FrameRecord r;
                r.trial = trial.id;
                r.system = system;
                r.frame = frame;
                r.time_s = static_cast<double>(p.plan.frame_start(frame)) / p.sample_rate;
                r.active = active.size();
                r.source = ps[s].source;
                r.ps = ps[s];
                r.pm = pm[s];
                rec[k - b0].push_back(r);
              }
            } catch (...) {
              err[k - b0] = std::current_exception();
            }
          }
        };
        std::vector<std::thread> pool_threads;
        for (std::size_t w = 1; w < std::min(workers, b1 - b0); ++w) pool_threads.emplace_back(work);
        work();
        for (auto& th : pool_threads) th.join();
        for (std::size_t k = b0; k < b1; ++k) {
          if (err[k - b0]) {
            out.flush();
            try {
              std::rethrow_exception(err[k - b0]);
            } catch (...) {
              rethrow_with("trial " + trial.id + " system " + system + " frame " +
                           std::to_string(p.plan.active_frames[k]));
            }
          }
          const bool was_resumed = resumed.count({trial.id, system, p.plan.active_frames[k]}) > 0;
          for (const auto& r : rec[k - b0]) {
            out << frame_record_json(r).dump() << '\n';
            all.push_back(r);
          }
          if (cfg.spectra) spectra_out << spec[k - b0] << '\n';
          if (was_resumed) ++sum.frames_resumed;
          else ++fresh;
        }
        out.flush();
        if (cfg.spectra) spectra_out.flush();
      }
      sum.frames_scored += fresh;
      log("  system " + system + ": " + std::to_string(nf) + " frames (" + std::to_string(fresh) + " scored)");
    }
  }
  out.close();
  sum.records = all.size();

  // utterance level
  sum.table.scenario = std::string(scenario_name(cfg.scenario));
  std::map<std::tuple<std::string, std::string, int>, std::vector<const FrameRecord*>> utt;
  for (const auto& r : all) utt[{r.trial, r.system, r.source}].push_back(&r);
  std::vector<double> nmi_ps, nmi_pm, ps_all, pm_all;
  std::ostringstream csv;
  csv << "trial,system,source,frames,pm_frames,ps,ps_b,ps_h,ps_mean,pm,pm_b,pm_h,mos\n";
  json utt_json = json::array();
  std::vector<double> ps_mean_col;
  for (const auto& [key, recs] : utt) {
    std::vector<double> ps, psr, psh, pm_frames, pm, pmr, pmh;
    for (const auto* r : recs) {
      ps.push_back(r->ps.value);
      psr.push_back(r->ps.radius);
      psh.push_back(r->ps.half_width);
      pm_frames.push_back(r->pm.value);
      if (!r->pm.valid) continue;
      pm.push_back(r->pm.value);
      pmr.push_back(r->pm.radius);
      pmh.push_back(r->pm.half_width);
    }
    ScoreRow row;
    std::tie(row.trial, row.system, row.source) = key;
    row.frames = recs.size();
    row.pm_frames = pm.size();
    std::tie(row.ps, row.ps_bound) = pool(ps, psr, psh, cfg.ps.aggregation, cfg.confidence());
    if (pm.empty()) {
      row.pm = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::tie(row.pm, row.pm_bound) = pool(pm, pmr, pmh, cfg.pm.aggregation, cfg.confidence());
    }
    ps_mean_col.push_back(mean_of(ps));
    sum.table.rows.push_back(row);
    const auto nps = minmax_normalize(ps), npm = minmax_normalize(pm_frames);
    nmi_ps.insert(nmi_ps.end(), nps.begin(), nps.end());
    nmi_pm.insert(nmi_pm.end(), npm.begin(), npm.end());
    ps_all.insert(ps_all.end(), ps.begin(), ps.end());
    pm_all.insert(pm_all.end(), pm_frames.begin(), pm_frames.end());
  }
  if (!cfg.mos.empty()) {
    const auto n = attach_mos(sum.table, read_mos_csv(cfg.mos));
    log("MOS matched " + std::to_string(n) + " of " + std::to_string(sum.table.rows.size()) + " utterances");
    try {
      sum.report = scenario_report(sum.table, {cfg.confidence(), cfg.mc_draws, cfg.seed, cfg.rho});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientSystems && e.code() != ErrorCode::kInvalidArgument) throw;
      sum.report_note = e.what();
    }
  } else {
    sum.report_note = "no MOS table given";
  }
  for (std::size_t k = 0; k < sum.table.rows.size(); ++k) {
    const auto& r = sum.table.rows[k];
    csv << r.trial << ',' << r.system << ',' << r.source << ',' << r.frames << ',' << r.pm_frames << ','
        << csv_num(r.ps) << ','
        << csv_num(r.ps_bound.b) << ',' << csv_num(r.ps_bound.h) << ',' << csv_num(ps_mean_col[k]) << ','
        << csv_num(r.pm) << ',' << csv_num(r.pm_bound.b) << ',' << csv_num(r.pm_bound.h) << ','
        << (r.mos ? csv_num(*r.mos) : std::string()) << '\n';
    utt_json.push_back({{"trial", r.trial},
                        {"system", r.system},
                        {"source", r.source},
                        {"frames", r.frames},
                        {"pm_frames", r.pm_frames},
                        {"ps", r.ps},
                        {"ps_b", r.ps_bound.b},
                        {"ps_h", r.ps_bound.h},
                        {"ps_mean", ps_mean_col[k]},
                        {"pm", std::isfinite(r.pm) ? json(r.pm) : json()},
                        {"pm_b", r.pm_bound.b},
                        {"pm_h", r.pm_bound.h},
                        {"mos", r.mos ? json(*r.mos) : json()}});
  }
  write_text(cfg.output_dir / "utterances.csv", csv.str());

  sum.nmi = nmi_thresholded(nmi_ps, nmi_pm, default_thresholds());
  std::size_t valid = 0, fallback = 0;  // PS bounds carry no validity flag
  bool unit = true;
  std::vector<double> psr, psh, pmr, pmh;
  for (const auto& r : all) {
    valid += r.pm.valid;
    fallback += r.pm.fallback;
    unit = unit && r.ps.value >= 0.0 && r.ps.value <= 1.0 && r.pm.value >= 0.0 && r.pm.value <= 1.0;
    psr.push_back(r.ps.radius);
    psh.push_back(r.ps.half_width);
    pmr.push_back(r.pm.radius);
    pmh.push_back(r.pm.half_width);
  }
  sum.mean_ps = mean_of(ps_all);
  sum.mean_pm = mean_of(pm_all);
  sum.pm_valid_fraction = all.empty() ? 0.0 : static_cast<double>(valid) / static_cast<double>(all.size());

  sum.json = {{"config", run_config_summary(cfg)},
              {"delay_ms", opt.delay_ms},
              {"frames",
               {{"records", all.size()},
                {"mean_ps", sum.mean_ps},
                {"mean_pm", sum.mean_pm},
                {"scores_in_unit_interval", unit},
                {"ps_mean_radius", mean_of(psr)},
                {"ps_mean_half_width", mean_of(psh)},
                {"pm_mean_radius", mean_of(pmr)},
                {"pm_mean_half_width", mean_of(pmh)},
                {"valid_bound_fraction", sum.pm_valid_fraction},
                {"pm_gradient_fallbacks", fallback}}},
              {"utterances", utt_json},
              {"correlation", sum.report ? report_json(*sum.report) : json()},
              {"correlation_note", sum.report_note},
              {"nmi", nmi_json(sum.nmi)}};
  write_text(cfg.output_dir / "report.json", sum.json.dump(2) + "\n");

  std::ostringstream txt;
  txt << "scenario " << scenario_name(cfg.scenario) << ", " << all.size() << " frame records";
  if (opt.delay_ms > 0.0) txt << ", outputs delayed " << fmt_ms(opt.delay_ms) << " ms";
  txt << "\nmean frame PS " << csv_num(sum.mean_ps) << ", mean frame PM " << csv_num(sum.mean_pm)
      << ", valid bounds " << csv_num(100.0 * sum.pm_valid_fraction) << "%\n\n";
  txt << "trial      system       src frames    PS(utt)     PM(utt)     MOS\n";
  for (const auto& r : sum.table.rows) {
    char line[200];
    std::snprintf(line, sizeof line, "%-10s %-12s %3d %6zu  %6.3f+-%-5.3f %6.3f+-%-5.3f %s\n", r.trial.c_str(),
                  r.system.c_str(), r.source, r.frames, r.ps, r.ps_bound.b + r.ps_bound.h, r.pm,
                  r.pm_bound.b + r.pm_bound.h, r.mos ? csv_num(*r.mos).c_str() : "-");
    txt << line;
  }
  txt << '\n';
  if (sum.report) txt << report_text(*sum.report);
  else txt << "correlation: " << sum.report_note << '\n';
  txt << '\n' << nmi_text(sum.nmi);
  write_text(cfg.output_dir / "report.txt", txt.str());
  if (cfg.plots) {
    write_text(cfg.output_dir / "nmi.svg", nmi_svg(sum.nmi));
    write_text(cfg.output_dir / "scores.svg", histogram_svg(ps_all, pm_all));
  }
  return sum;
}

std::vector<SweepRow> misalignment_sweep(const RunConfig& cfg, const std::vector<double>& delays,
                                         const RunOptions& opt) {
  require(!delays.empty(), ErrorCode::kConfigError, "sweep needs at least one delay");
  require(cfg.encoder == Encoder::kRaw, ErrorCode::kConfigError, "delay sweep needs the raw encoder");
  std::vector<SweepRow> rows;
  for (double d : delays) {
    require(d >= 0.0, ErrorCode::kConfigError, "delays must be non-negative");
    RunConfig c = cfg;
    c.output_dir = cfg.output_dir / ("delay_" + fmt_ms(d) + "ms");
    RunOptions o = opt;
    o.delay_ms = d;
    if (opt.log) opt.log("delay " + fmt_ms(d) + " ms");
    const RunSummary s = run_evaluation(c, o);
    rows.push_back({d, s.records, s.mean_ps, s.mean_pm, s.report});
  }
  std::ostringstream csv;
  csv << "delay_ms,records,mean_ps,mean_pm,ps_pcc,ps_srcc,pm_pcc,pm_srcc\n";
  for (const auto& r : rows) {
    csv << fmt_ms(r.delay_ms) << ',' << r.records << ',' << csv_num(r.mean_ps) << ',' << csv_num(r.mean_pm);
    if (r.report)
      csv << ',' << csv_num(r.report->ps.pcc) << ',' << csv_num(r.report->ps.srcc) << ','
          << csv_num(r.report->pm.pcc) << ',' << csv_num(r.report->pm.srcc);
    else
      csv << ",,,,";
    csv << '\n';
  }
  write_text(cfg.output_dir / "sweep.csv", csv.str());
  write_text(cfg.output_dir / "sweep.json", sweep_json(rows).dump(2) + "\n");
  return rows;
}

json sweep_json(const std::vector<SweepRow>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    json c;
    if (r.report)
      c = {{"PS", {{"pcc", r.report->ps.pcc}, {"srcc", r.report->ps.srcc}}},
           {"PM", {{"pcc", r.report->pm.pcc}, {"srcc", r.report->pm.srcc}}}};
    a.push_back({{"delay_ms", r.delay_ms},
                 {"records", r.records},
                 {"mean_ps", r.mean_ps},
                 {"mean_pm", r.mean_pm},
                 {"correlation", c}});
  }
  return a;
}

namespace {

std::size_t write_bank(const Utterance& u, const DistortionBank& b, const std::string& input,
                       const std::filesystem::path& out_dir) {
  const auto items = generate_bank(u, b);
  std::filesystem::create_directories(out_dir);
  json manifest{{"input", input},
                {"variant", variant_name(b.variant)},
                {"seed", b.seed},
                {"sample_rate", u.sample_rate},
                {"entries", json::array()}};
  for (std::size_t k = 0; k < items.size(); ++k) {
    char name[96];
    std::snprintf(name, sizeof name, "%03zu_%s.wav", k + 1, std::string(family_name(b.specs[k].family)).c_str());
    write_wav(out_dir / name, items[k].samples, u.sample_rate, WavEncoding::kFloat32);
    json e = spec_to_json(b.specs[k]);
    e["file"] = name;
    manifest["entries"].push_back(e);
  }
  write_text(out_dir / "bank.json", manifest.dump(2) + "\n");
  return items.size();
}

}  // namespace

std::size_t dump_bank(const std::filesystem::path& input, MeasureVariant variant, std::uint64_t seed,
                      const BankConfig& bank, const std::filesystem::path& out_dir) {
  const Utterance u = load(input, Role::kReference, 0);
  return write_bank(u, make_bank(variant, u.sample_rate, seed, bank), input.string(), out_dir);
}

std::size_t dump_config_banks(const RunConfig& cfg, MeasureVariant variant, const std::filesystem::path& out_dir) {
  std::size_t n = 0;
  for (const auto& t : cfg.trials) {
    for (const auto& [id, path] : t.references) {
      Utterance u = load(path, Role::kReference, id);
      try {
        u = normalize_loudness(u, cfg.target_lufs);
      } catch (...) {
        rethrow_with("trial " + t.id + " reference " + std::to_string(id));
      }
      n += write_bank(u, trial_bank(cfg, t, id, variant, u.sample_rate), path.string(),
                      out_dir / t.id / ("source" + std::to_string(id)));
    }
  }
  return n;
}

}  // namespace mapss
