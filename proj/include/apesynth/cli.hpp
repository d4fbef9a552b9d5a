//
// Copyright 2026 The apesynth Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// The `apesynth` command-line tool. Each subcommand streams its inputs in
// fixed-size chunks, processes a chunk on the worker pool and writes results
// in input order, so memory stays bounded and output bytes do not depend on
// --threads.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 external-filler protocol
// error.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "apesynth/corpus.hpp"
#include "apesynth/edit_align.hpp"
#include "apesynth/error.hpp"
#include "apesynth/external_filler.hpp"
#include "apesynth/filler.hpp"
#include "apesynth/interleave.hpp"
#include "apesynth/masker.hpp"
#include "apesynth/metrics.hpp"
#include "apesynth/mlm_data.hpp"
#include "apesynth/parallel.hpp"
#include "apesynth/provenance.hpp"
#include "apesynth/rng.hpp"
#include "apesynth/stats.hpp"

namespace apesynth::cli {

inline constexpr std::size_t kChunkRecords = 8192;

struct Common {
  unsigned threads = 0;  // 0 = all cores
  std::string format = "auto";

  unsigned workers() const { return threads == 0 ? default_threads() : threads; }
  Format format_for(const std::string& path) const {
    return format == "auto" ? format_from_path(path) : parse_format(format);
  }
};

inline void require_input(const std::string& path, std::string_view what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw UsageError(std::string(what) + " not found: '" + path + "'");
  }
}

// Shift handling must match the one used to build the stats file, or the
// rates being compared are not commensurable.
inline bool resolve_shifts(bool flag_given, const GoldStats& stats) {
  if (flag_given && !stats.allow_shifts) {
    throw UsageError(
        "--allow-shifts given but the stats file was built without shifts; "
        "rebuild it with `apesynth stats --allow-shifts`");
  }
  return stats.allow_shifts;
}

template <typename In, typename Out, typename Fn>
void stream_map(CorpusReader<In>& reader, CorpusWriter<Out>& writer,
                unsigned threads, Fn&& fn) {
  while (true) {
    auto chunk = reader.next_chunk(kChunkRecords);
    if (chunk.empty()) break;
    auto out = parallel_map_collect(std::span<const In>(chunk), threads, fn);
    for (const auto& r : out) writer.write(r);
  }
  writer.close();
}

// Canonical option list of a parsed subcommand for provenance records.
inline std::vector<std::pair<std::string, std::string>> canonical_options(
    const CLI::App& sub) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help" || name == "--threads" || opt->count() == 0) continue;
    std::string value;
    if (opt->get_expected_min() > 0) {
      for (const auto& r : opt->results()) {
        if (!value.empty()) value += ",";
        value += r;
      }
    }
    out.emplace_back(name, value);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

struct StatsArgs {
  std::string gold, out;
  bool allow_shifts = false;
};

inline void cmd_stats(const StatsArgs& a, const Common& c, Provenance prov,
                      std::ostream& log) {
  require_input(a.gold, "gold corpus");
  CorpusReader<Triplet> reader(a.gold, c.format_for(a.gold));
  GoldStatsCollector collector(a.allow_shifts);
  while (true) {
    auto chunk = reader.next_chunk(kChunkRecords);
    if (chunk.empty()) break;
    collector.add(chunk, c.workers());
  }
  GoldStats s = std::move(collector).finish();
  s.corpus_digest = sha256_file(a.gold);
  save_stats(s, a.out);
  prov.inputs = {a.gold};
  write_provenance(a.out, prov);
  log << "records " << s.rates.size() << "  mean_rate " << s.rates.mean()
      << "  stddev " << s.rates.stddev() << "\n"
      << "mu keep " << s.mu.keep << "  sub " << s.mu.sub << "  ins "
      << s.mu.ins << "  del " << s.mu.del << "\n";
}

struct MlmDataArgs {
  std::string trans, stats, out;
  std::uint64_t seed = 0;
  bool allow_shifts = false;
};

inline void cmd_mlm_data(const MlmDataArgs& a, const Common& c,
                         Provenance prov, std::ostream& log) {
  require_input(a.trans, "translation corpus");
  const GoldStats stats = load_stats(a.stats);
  const bool shifts = resolve_shifts(a.allow_shifts, stats);
  CorpusReader<Triplet> reader(a.trans, c.format_for(a.trans));
  CorpusWriter<MlmTrainRecord> writer(a.out, Format::kJsonl);
  std::uint64_t records = 0, masks = 0;
  stream_map(reader, writer, c.workers(), [&](const Triplet& t) {
    Rng rng = record_rng(a.seed, t.id, Stream::kMlmData);
    return build_mlm_record(t, stats.rates, rng, shifts);
  });
  for (CorpusReader<MlmTrainRecord> check(a.out, Format::kJsonl);
       auto r = check.next();) {
    ++records;
    masks += r->y_mask.mask_count();
  }
  prov.inputs = {a.trans, a.stats};
  write_provenance(a.out, prov);
  log << "records " << records << "  masks " << masks << "\n";
}

struct TrainFillerArgs {
  std::string mlm, out;
};

inline void cmd_train_filler(const TrainFillerArgs& a, const Common& c,
                             Provenance prov, std::ostream& log) {
  require_input(a.mlm, "filler training corpus");
  CorpusReader<MlmTrainRecord> reader(a.mlm, c.format_for(a.mlm));
  NativeFillerTrainer trainer;
  while (auto r = reader.next()) trainer.add(*r);
  const NativeFiller model = trainer.finish();
  model.save(a.out);
  prov.inputs = {a.mlm};
  write_provenance(a.out, prov);
  log << "mask sites " << trainer.mask_sites() << "\n";
}

struct MaskArgs {
  std::string bitext, stats, out;
  std::uint64_t seed = 0;
};

inline void cmd_mask(const MaskArgs& a, const Common& c, Provenance prov,
                     std::ostream& log) {
  require_input(a.bitext, "bitext corpus");
  const GoldStats stats = load_stats(a.stats);
  stats.mu.validate();
  CorpusReader<Bitext> reader(a.bitext, c.format_for(a.bitext));
  CorpusWriter<MaskedRecord> writer(a.out, Format::kJsonl);
  stream_map(reader, writer, c.workers(), [&](const Bitext& b) {
    Rng rng = record_rng(a.seed, b.id, Stream::kMask);
    return mask_reference(b, stats.mu, rng);
  });
  std::uint64_t records = 0, degenerate = 0;
  for (CorpusReader<MaskedRecord> check(a.out, Format::kJsonl);
       auto r = check.next();) {
    ++records;
    degenerate += r->degenerate();
  }
  prov.inputs = {a.bitext, a.stats};
  write_provenance(a.out, prov);
  log << "records " << records << "  empty " << degenerate << "\n";
}

struct FillArgs {
  std::string masked, model, filler_cmd, out;
  std::uint64_t seed = 0;
  bool drop_empty = false;
  std::size_t batch_size = 64;
  std::size_t max_inflight = 4;
  double timeout_s = 60.0;
};

inline void cmd_fill(const FillArgs& a, const Common& c, Provenance prov,
                     std::ostream& log) {
  require_input(a.masked, "masked corpus");
  if (a.model.empty() == a.filler_cmd.empty()) {
    throw UsageError("give exactly one of --model or --filler-cmd");
  }
  std::optional<NativeFiller> native;
  std::unique_ptr<Filler> filler;
  if (!a.model.empty()) {
    native = NativeFiller::load(a.model);
    filler = std::make_unique<NativeFillerAdapter>(*native, a.seed, c.workers());
  } else {
    if (!(a.timeout_s > 0)) throw UsageError("--timeout must be positive");
    ExternalFillerOptions opts;
    opts.batch_size = a.batch_size;
    opts.max_inflight = a.max_inflight;
    opts.timeout = std::chrono::milliseconds(
        static_cast<std::int64_t>(a.timeout_s * 1000.0));
    filler = std::make_unique<ExternalFiller>(a.filler_cmd, opts);
  }
  CorpusReader<MaskedRecord> reader(a.masked, Format::kJsonl);
  CorpusWriter<Triplet> writer(a.out, c.format_for(a.out));
  std::uint64_t in = 0, written = 0;
  while (true) {
    auto chunk = reader.next_chunk(kChunkRecords);
    if (chunk.empty()) break;
    in += chunk.size();
    const auto triplets = fill_to_triplets(chunk, *filler, a.drop_empty);
    for (const auto& t : triplets) writer.write(t);
    written += triplets.size();
  }
  writer.close();
  if (auto* ext = dynamic_cast<ExternalFiller*>(filler.get())) ext->shutdown();
  prov.inputs = {a.masked};
  if (!a.model.empty()) prov.inputs.push_back(a.model);
  write_provenance(a.out, prov);
  log << "records " << in << "  written " << written << "  dropped "
      << in - written << "\n";
}

struct RandArgs {
  std::string bitext, stats, out;
  std::uint64_t seed = 0;
  bool drop_empty = false;
};

inline void cmd_rand(const RandArgs& a, const Common& c, Provenance prov,
                     std::ostream& log) {
  require_input(a.bitext, "bitext corpus");
  const GoldStats stats = load_stats(a.stats);
  stats.mu.validate();
  const Format fmt = c.format_for(a.bitext);
  TokenVocab vocab;
  {
    CorpusReader<Bitext> pass(a.bitext, fmt);
    while (auto b = pass.next()) vocab.add(b->ref);
  }
  vocab.freeze();
  CorpusReader<Bitext> reader(a.bitext, fmt);
  CorpusWriter<Triplet> writer(a.out, c.format_for(a.out));
  std::uint64_t in = 0, written = 0;
  while (true) {
    auto chunk = reader.next_chunk(kChunkRecords);
    if (chunk.empty()) break;
    in += chunk.size();
    auto noised = parallel_map_collect(
        std::span<const Bitext>(chunk), c.workers(), [&](const Bitext& b) {
          Rng rng = record_rng(a.seed, b.id, Stream::kRand);
          return rand_noise(b, stats.mu, vocab, rng);
        });
    for (const auto& t : noised) {
      if (t.mt.empty()) {
        if (a.drop_empty) continue;
        throw DataError("record " + std::to_string(t.id) +
                        " lost every token to deletion; rerun with --drop-empty");
      }
      writer.write(t);
      ++written;
    }
  }
  writer.close();
  prov.inputs = {a.bitext, a.stats};
  write_provenance(a.out, prov);
  log << "records " << in << "  written " << written << "\n";
}

struct InterleaveArgs {
  std::string trans, noise, stats, lambda, out, report;
  bool allow_shifts = false;
};

inline void cmd_interleave(const InterleaveArgs& a, const Common& c,
                           Provenance prov, std::ostream& log) {
  InterleaveConfig cfg;
  cfg.lambda = Lambda::parse(a.lambda);
  require_input(a.trans, "translation corpus");
  require_input(a.noise, "noised corpus");
  const GoldStats stats = load_stats(a.stats);
  cfg.mu_gold = stats.rates.mean();
  cfg.sigma_gold = stats.rates.stddev();
  cfg.allow_shifts = resolve_shifts(a.allow_shifts, stats);

  CorpusReader<Triplet> trans(a.trans, c.format_for(a.trans));
  CorpusReader<Triplet> noise(a.noise, c.format_for(a.noise));
  CorpusWriter<Triplet> writer(a.out, c.format_for(a.out));
  InterleaveReport report;
  while (true) {
    auto tc = trans.next_chunk(kChunkRecords);
    auto nc = noise.next_chunk(kChunkRecords);
    if (tc.size() != nc.size()) {
      throw DataError("translation and noised corpora differ in length");
    }
    if (tc.empty()) break;
    auto [merged, part] = interleave(tc, nc, cfg, c.workers());
    writer.write_all(merged);
    report += part;
  }
  writer.close();
  const std::string report_path = a.report.empty() ? a.out + ".report.json" : a.report;
  {
    std::ofstream rep(report_path, std::ios::binary);
    if (!rep) throw DataError("cannot write report '" + report_path + "'");
    rep << to_json(report, cfg).dump(2) << '\n';
  }
  prov.inputs = {a.trans, a.noise, a.stats};
  write_provenance(a.out, prov);
  write_provenance(report_path, prov);
  log << "lambda " << cfg.lambda.str() << "  noise "
      << format_percent(100.0 * report.noise_ratio()) << "%  trans "
      << format_percent(100.0 * report.trans_ratio()) << "%  (" << report.total
      << " records)\n";
}

struct ScoreArgs {
  std::string hyp, ref, triplets, metric = "all", json;
  bool allow_shifts = false;
};

inline void load_pairs(const std::string& hyp, const std::string& ref,
                       const std::string& triplets, const Common& c,
                       std::vector<TokenSeq>& hyps, std::vector<TokenSeq>& refs) {
  if (!triplets.empty()) {
    if (!hyp.empty() || !ref.empty()) {
      throw UsageError("give either --triplets or --hyp/--ref, not both");
    }
    require_input(triplets, "triplet corpus");
    CorpusReader<Triplet> reader(triplets, c.format_for(triplets));
    while (auto t = reader.next()) {
      hyps.push_back(std::move(t->mt));
      refs.push_back(std::move(t->pe));
    }
    return;
  }
  if (hyp.empty() || ref.empty()) {
    throw UsageError("need --hyp and --ref, or --triplets");
  }
  require_input(hyp, "hypothesis file");
  require_input(ref, "reference file");
  hyps = read_segments(hyp);
  refs = read_segments(ref);
}

inline void cmd_score(const ScoreArgs& a, const Common& c, std::ostream& out) {
  if (a.metric != "ter" && a.metric != "bleu" && a.metric != "all") {
    throw UsageError("--metric must be ter, bleu or all");
  }
  std::vector<TokenSeq> hyps, refs;
  load_pairs(a.hyp, a.ref, a.triplets, c, hyps, refs);
  nlohmann::ordered_json j;
  j["segments"] = hyps.size();
  if (a.metric != "bleu") {
    const auto ter = corpus_ter(hyps, refs, a.allow_shifts, c.workers());
    out << "TER  " << format_percent(ter.percent) << "  (" << ter.edits
        << " edits / " << ter.ref_len << " reference tokens"
        << (a.allow_shifts ? ", shifts" : "") << ")\n";
    j["ter"] = {{"percent", ter.percent},
                {"edits", ter.edits},
                {"ref_len", ter.ref_len},
                {"allow_shifts", a.allow_shifts}};
  }
  if (a.metric != "ter") {
    const auto bleu = corpus_bleu(hyps, refs);
    out << "BLEU " << format_percent(bleu.score) << "  (BP "
        << bleu.brevity_penalty << ", hyp_len " << bleu.hyp_len << ", ref_len "
        << bleu.ref_len << ")\n";
    j["bleu"] = {{"score", bleu.score},
                 {"precisions",
                  {bleu.precision(0), bleu.precision(1), bleu.precision(2),
                   bleu.precision(3)}},
                 {"brevity_penalty", bleu.brevity_penalty},
                 {"hyp_len", bleu.hyp_len},
                 {"ref_len", bleu.ref_len}};
  }
  if (!a.json.empty()) {
    std::ofstream f(a.json, std::ios::binary);
    if (!f) throw DataError("cannot write '" + a.json + "'");
    f << j.dump(2) << '\n';
  }
}

struct ReportDistArgs {
  std::string a, b, label_a = "A", label_b = "B", csv, json;
  bool allow_shifts = false;
};

inline void cmd_report_dist(const ReportDistArgs& a, const Common& c,
                            Provenance prov, std::ostream& out) {
  require_input(a.a, "corpus A");
  std::vector<DistSeries> series;
  {
    auto corpus = read_corpus<Triplet>(a.a, c.format_for(a.a));
    series.push_back(distribution_series(a.label_a, std::span<const Triplet>(corpus),
                                         a.allow_shifts, c.workers()));
  }
  prov.inputs = {a.a};
  if (!a.b.empty()) {
    require_input(a.b, "corpus B");
    auto corpus = read_corpus<Triplet>(a.b, c.format_for(a.b));
    series.push_back(distribution_series(a.label_b, std::span<const Triplet>(corpus),
                                         a.allow_shifts, c.workers()));
    prov.inputs.push_back(a.b);
  }
  if (a.csv.empty()) {
    write_histogram_csv(out, series);
  } else {
    std::ofstream f(a.csv, std::ios::binary);
    if (!f) throw DataError("cannot write '" + a.csv + "'");
    write_histogram_csv(f, series);
    f.close();
    write_provenance(a.csv, prov);
  }
  if (!a.json.empty()) {
    std::ofstream f(a.json, std::ios::binary);
    if (!f) throw DataError("cannot write '" + a.json + "'");
    f << distribution_json(series).dump(2) << '\n';
    f.close();
    write_provenance(a.json, prov);
  }
}

struct AlignArgs {
  std::string hyp, ref, triplets, out;
  bool allow_shifts = false;
};

inline nlohmann::ordered_json alignment_json(std::uint64_t id, const Alignment& al) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["distance"] = al.distance;
  j["shift_count"] = al.shift_count;
  j["ops"] = nlohmann::ordered_json::array();
  for (const auto& op : al.ops) {
    nlohmann::ordered_json o;
    o["op"] = to_string(op.kind);
    if (op.ref_token) {
      o["ref"] = *op.ref_token;
      o["ref_pos"] = *op.ref_pos;
    }
    if (op.hyp_token) {
      o["hyp"] = *op.hyp_token;
      o["hyp_pos"] = *op.hyp_pos;
    }
    j["ops"].push_back(std::move(o));
  }
  return j;
}

inline void cmd_align(const AlignArgs& a, const Common& c, Provenance prov) {
  std::vector<TokenSeq> hyps, refs;
  load_pairs(a.hyp, a.ref, a.triplets, c, hyps, refs);
  check_same_length(hyps.size(), refs.size());
  std::vector<std::string> lines(hyps.size());
  parallel_for(hyps.size(), c.workers(), [&](std::size_t i) {
    lines[i] = alignment_json(i, ter_align(hyps[i], refs[i], a.allow_shifts)).dump();
  });
  std::ofstream f(a.out, std::ios::binary);
  if (!f) throw DataError("cannot write '" + a.out + "'");
  for (const auto& l : lines) f << l << '\n';
  f.close();
  prov.inputs = a.triplets.empty() ? std::vector<std::string>{a.hyp, a.ref}
                                   : std::vector<std::string>{a.triplets};
  write_provenance(a.out, prov);
}

// ---------------------------------------------------------------------------

// Parses and runs one invocation. args[0] is the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"apesynth: synthetic post-editing triplets from bitexts", "apesynth"};
  app.set_config("--config", "", "TOML file with defaults for command options");
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sc, bool with_format = true) {
    sc->add_option("--threads", common.threads, "Worker threads (0 = all cores)");
    if (with_format) {
      sc->add_option("--format", common.format,
                     "Corpus format for tsv/jsonl files: auto, tsv, jsonl")
          ->check(CLI::IsMember({"auto", "tsv", "jsonl"}));
    }
  };

  StatsArgs stats_a;
  auto* stats = app.add_subcommand("stats", "Collect gold edit-rate and error-type statistics");
  stats->add_option("--gold", stats_a.gold, "Gold triplet corpus (src, mt, pe)")->required();
  stats->add_option("--out", stats_a.out, "Output stats file (JSON)")->required();
  stats->add_flag("--allow-shifts", stats_a.allow_shifts, "Use TER block shifts");
  add_common(stats);

  MlmDataArgs mlm_a;
  auto* mlm = app.add_subcommand("mlm-data", "Build filler training data from translation triplets");
  mlm->add_option("--trans", mlm_a.trans, "Translation triplet corpus (src, mt, ref)")->required();
  mlm->add_option("--stats", mlm_a.stats, "Stats file")->required();
  mlm->add_option("--seed", mlm_a.seed, "64-bit seed");
  mlm->add_option("--out", mlm_a.out, "Output JSONL")->required();
  mlm->add_flag("--allow-shifts", mlm_a.allow_shifts, "Use TER block shifts (must match stats)");
  add_common(mlm);

  TrainFillerArgs train_a;
  auto* train = app.add_subcommand("train-filler", "Train the native mask filler");
  train->add_option("--mlm", train_a.mlm, "Filler training JSONL from mlm-data")->required();
  train->add_option("--out", train_a.out, "Output model (JSON)")->required();
  add_common(train);

  MaskArgs mask_a;
  auto* mask = app.add_subcommand("mask", "Stochastically mask bitext references");
  mask->add_option("--bitext", mask_a.bitext, "Bitext corpus (src, ref)")->required();
  mask->add_option("--stats", mask_a.stats, "Stats file")->required();
  mask->add_option("--seed", mask_a.seed, "64-bit seed");
  mask->add_option("--out", mask_a.out, "Output masked JSONL")->required();
  add_common(mask);

  FillArgs fill_a;
  auto* fill = app.add_subcommand("fill", "Fill masks and emit synthetic triplets");
  fill->add_option("--masked", fill_a.masked, "Masked JSONL from mask")->required();
  fill->add_option("--model", fill_a.model, "Native filler model");
  fill->add_option("--filler-cmd", fill_a.filler_cmd, "External filler command line");
  fill->add_option("--seed", fill_a.seed, "64-bit seed (native filler)");
  fill->add_option("--out", fill_a.out, "Output triplet corpus")->required();
  fill->add_flag("--drop-empty", fill_a.drop_empty, "Drop records whose masked reference is empty");
  fill->add_option("--batch-size", fill_a.batch_size, "External filler batch size")
      ->check(CLI::PositiveNumber);
  fill->add_option("--max-inflight", fill_a.max_inflight, "External filler batches in flight")
      ->check(CLI::PositiveNumber);
  fill->add_option("--timeout", fill_a.timeout_s, "Seconds per external batch");
  add_common(fill);

  RandArgs rand_a;
  auto* rnd = app.add_subcommand("rand", "Random-noise baseline triplets");
  rnd->add_option("--bitext", rand_a.bitext, "Bitext corpus (src, ref)")->required();
  rnd->add_option("--stats", rand_a.stats, "Stats file")->required();
  rnd->add_option("--seed", rand_a.seed, "64-bit seed");
  rnd->add_option("--out", rand_a.out, "Output triplet corpus")->required();
  rnd->add_flag("--drop-empty", rand_a.drop_empty, "Drop records that lose every token");
  add_common(rnd);

  InterleaveArgs inter_a;
  auto* inter = app.add_subcommand("interleave", "Merge translation and noised corpora");
  inter->add_option("--trans", inter_a.trans, "Translation triplet corpus")->required();
  inter->add_option("--noise", inter_a.noise, "Noised triplet corpus")->required();
  inter->add_option("--stats", inter_a.stats, "Stats file")->required();
  inter->add_option("--lambda", inter_a.lambda, "0, inf, or a value in [1, 3]")->required();
  inter->add_option("--out", inter_a.out, "Output triplet corpus")->required();
  inter->add_option("--report", inter_a.report, "Report JSON (default: OUT.report.json)");
  inter->add_flag("--allow-shifts", inter_a.allow_shifts, "Use TER block shifts (must match stats)");
  add_common(inter);

  ScoreArgs score_a;
  auto* score = app.add_subcommand("score", "Corpus TER / BLEU");
  score->add_option("--hyp", score_a.hyp, "Hypothesis segments, one per line");
  score->add_option("--ref", score_a.ref, "Reference segments, one per line");
  score->add_option("--triplets", score_a.triplets, "Score mt against pe of a triplet corpus");
  score->add_option("--metric", score_a.metric, "ter, bleu or all");
  score->add_option("--json", score_a.json, "Also write a JSON report");
  score->add_flag("--allow-shifts", score_a.allow_shifts, "TER with block shifts");
  add_common(score);

  ReportDistArgs dist_a;
  auto* dist = app.add_subcommand("report-dist", "Edit-rate histograms of one or two corpora");
  dist->add_option("--a", dist_a.a, "Triplet corpus A")->required();
  dist->add_option("--b", dist_a.b, "Triplet corpus B");
  dist->add_option("--label-a", dist_a.label_a, "Series label for A");
  dist->add_option("--label-b", dist_a.label_b, "Series label for B");
  dist->add_option("--csv", dist_a.csv, "Histogram CSV (default: stdout)");
  dist->add_option("--json", dist_a.json, "Histogram JSON");
  dist->add_flag("--allow-shifts", dist_a.allow_shifts, "Use TER block shifts");
  add_common(dist);

  AlignArgs align_a;
  auto* aln = app.add_subcommand("align", "Dump word alignments as JSONL");
  aln->add_option("--hyp", align_a.hyp, "Hypothesis segments");
  aln->add_option("--ref", align_a.ref, "Reference segments");
  aln->add_option("--triplets", align_a.triplets, "Align mt against pe of a triplet corpus");
  aln->add_option("--out", align_a.out, "Output JSONL")->required();
  aln->add_flag("--allow-shifts", align_a.allow_shifts, "Use TER block shifts");
  add_common(aln);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    auto provenance = [&](CLI::App* sc, std::optional<std::uint64_t> seed) {
      Provenance p;
      p.command = sc->get_name();
      p.options = canonical_options(*sc);
      p.seed = seed;
      return p;
    };
    if (*stats) {
      cmd_stats(stats_a, common, provenance(stats, std::nullopt), out);
    } else if (*mlm) {
      cmd_mlm_data(mlm_a, common, provenance(mlm, mlm_a.seed), out);
    } else if (*train) {
      cmd_train_filler(train_a, common, provenance(train, std::nullopt), out);
    } else if (*mask) {
      cmd_mask(mask_a, common, provenance(mask, mask_a.seed), out);
    } else if (*fill) {
      cmd_fill(fill_a, common, provenance(fill, fill_a.seed), out);
    } else if (*rnd) {
      cmd_rand(rand_a, common, provenance(rnd, rand_a.seed), out);
    } else if (*inter) {
      cmd_interleave(inter_a, common, provenance(inter, std::nullopt), out);
    } else if (*score) {
      cmd_score(score_a, common, out);
    } else if (*dist) {
      cmd_report_dist(dist_a, common, provenance(dist, std::nullopt), out);
    } else if (*aln) {
      cmd_align(align_a, common, provenance(aln, std::nullopt));
    }
  } catch (const Error& e) {
    err << "apesynth: error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    err << "apesynth: error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  }
  return 0;
}

}  // namespace apesynth::cli
