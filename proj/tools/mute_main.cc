// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the library only through mute/mute.h.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mute/mute.h"

namespace {

struct Override {
  std::string section;
  std::string key;
  std::string value;
};

int fail(mute_status st, const std::string& context) {
  std::cerr << "mute: " << context << ": " << mute_status_name(st) << ": "
            << mute_last_error() << '\n';
  return static_cast<int>(st);
}

// "section.key=value"
std::optional<Override> parse_set(const std::string& text) {
  const auto eq = text.find('=');
  const auto dot = text.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    return std::nullopt;
  }
  return Override{text.substr(0, dot), text.substr(dot + 1, eq - dot - 1),
                  text.substr(eq + 1)};
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

class Session {
 public:
  ~Session() { mute_config_free(config_); }

  int open(const std::string& path) {
    const mute_status st = path.empty() ? mute_config_new(&config_)
                                        : mute_config_load(path.c_str(), &config_);
    return st == MUTE_OK ? 0 : fail(st, path.empty() ? "config" : path);
  }

  void set(const std::string& section, const std::string& key,
           const std::string& value) {
    pending_.push_back({section, key, value});
  }

  int apply() {
    for (const Override& o : pending_) {
      const mute_status st = mute_config_set(config_, o.section.c_str(),
                                             o.key.c_str(), o.value.c_str());
      if (st != MUTE_OK) return fail(st, "[" + o.section + "] " + o.key);
    }
    return 0;
  }

  const mute_config* config() const { return config_; }

 private:
  mute_config* config_ = nullptr;
  std::vector<Override> pending_;
};

const char* dir_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mute: two-stage LAS training with text-only data"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("-c,--config", config_path, "experiment config file");
  app.add_option("--set", sets, "override, as section.key=value")->take_all();
  app.add_flag_callback("--version", [] {
    std::cout << mute_version() << '\n';
    std::exit(0);
  });

  std::string out;
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("-o,--out", out, "output directory");
  };

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic corpus");
  add_out(gen);
  std::optional<std::size_t> gen_train, gen_text, gen_seed;
  gen->add_option("--train-size", gen_train, "paired training utterances");
  gen->add_option("--text-size", gen_text, "text-only sentences");
  gen->add_option("--seed", gen_seed, "corpus seed");

  // train
  auto* tr = app.add_subcommand("train", "run one training stage");
  add_out(tr);
  std::optional<int> stage;
  std::optional<std::string> variant, corpus, init;
  std::optional<double> ratio;
  bool resume = false;
  std::uint64_t stop_at = 0;
  tr->add_option("--stage", stage, "1 or 2")->check(CLI::IsMember({1, 2}));
  tr->add_option("--variant", variant,
                 "baseline, mute-z, mute-l, mute-zt or mute-lt");
  tr->add_option("--ratio", ratio, "text-only mixing ratio (stage 2)");
  tr->add_option("--corpus", corpus, "corpus directory (default: generate)");
  tr->add_option("--init", init, "stage-1 checkpoint (stage 2)");
  tr->add_flag("--resume", resume, "continue from the state file in --out");
  tr->add_option("--stop-at", stop_at, "halt after this many steps");

  // train-lm
  auto* tlm = app.add_subcommand("train-lm", "train the fusion language model");
  add_out(tlm);
  std::optional<std::string> lm_corpus;
  tlm->add_option("--corpus", lm_corpus, "corpus directory (default: generate)");

  // decode
  auto* dec = app.add_subcommand("decode", "beam-search a manifest");
  add_out(dec);
  std::optional<std::string> ckpt, manifest, lm, vocab;
  std::optional<std::size_t> beam, max_len;
  std::optional<double> lambda, alpha;
  dec->add_option("checkpoint,--checkpoint", ckpt, "model checkpoint");
  dec->add_option("manifest,--manifest", manifest, "utterance manifest");
  dec->add_option("--beam", beam, "beam width");
  dec->add_option("--lm", lm, "fusion language model checkpoint");
  dec->add_option("--lambda", lambda, "fusion weight");
  dec->add_option("--alpha", alpha, "length normalization exponent");
  dec->add_option("--max-length", max_len, "maximum output tokens");
  dec->add_option("--vocab", vocab, "vocabulary file");

  // score
  auto* sc = app.add_subcommand("score", "WER report of an n-best file");
  add_out(sc);
  std::optional<std::string> nbest, sc_manifest, sc_vocab;
  bool no_diffs = false;
  sc->add_option("nbest,--nbest", nbest, "n-best file");
  sc->add_option("manifest,--manifest", sc_manifest, "reference manifest");
  sc->add_option("--vocab", sc_vocab, "vocabulary file");
  sc->add_flag("--no-diffs", no_diffs, "omit per-utterance diffs");

  // sweep
  auto* sw = app.add_subcommand("sweep", "mixing-ratio sweep");
  add_out(sw);
  std::optional<std::string> ratios, seeds, variants, sw_corpus;
  std::optional<std::size_t> jobs;
  bool quiet = false;
  sw->add_option("--ratios", ratios, "comma list, e.g. 0,0.2,0.4,0.6,0.8");
  sw->add_option("--seeds", seeds, "count k (seeds 1..k) or comma list");
  sw->add_option("--variants", variants, "comma list of variants");
  sw->add_option("--jobs", jobs, "parallel cells (0: all cores)");
  sw->add_option("--corpus", sw_corpus, "shared corpus directory");
  sw->add_flag("-q,--quiet", quiet, "no progress lines");

  CLI11_PARSE(app, argc, argv);

  Session s;
  if (int rc = s.open(config_path)) return rc;
  for (const std::string& text : sets) {
    auto o = parse_set(text);
    if (!o) {
      std::cerr << "mute: --set expects section.key=value, got '" << text << "'\n";
      return static_cast<int>(MUTE_ERR_CONTRACT);
    }
    s.set(o->section, o->key, o->value);
  }

  mute_status st = MUTE_OK;
  std::string what;
  if (*gen) {
    if (gen_train) s.set("corpus", "train_size", std::to_string(*gen_train));
    if (gen_text) s.set("corpus", "text_size", std::to_string(*gen_text));
    if (gen_seed) s.set("corpus", "seed", std::to_string(*gen_seed));
    if (int rc = s.apply()) return rc;
    what = "generate";
    st = mute_generate(s.config(), dir_or_null(out));
  } else if (*tr) {
    if (stage) s.set("run", "stage", std::to_string(*stage));
    if (variant) s.set("model", "variant", *variant);
    if (ratio) s.set("stage2", "ratio", fmt(*ratio));
    if (corpus) s.set("run", "corpus_dir", *corpus);
    if (init) s.set("run", "init_checkpoint", *init);
    if (int rc = s.apply()) return rc;
    what = "train";
    st = mute_train(s.config(), dir_or_null(out), resume ? 1 : 0, stop_at);
  } else if (*tlm) {
    if (lm_corpus) s.set("run", "corpus_dir", *lm_corpus);
    if (int rc = s.apply()) return rc;
    what = "train-lm";
    st = mute_train_lm(s.config(), dir_or_null(out));
  } else if (*dec) {
    if (ckpt) s.set("run", "checkpoint", *ckpt);
    if (manifest) s.set("run", "manifest", *manifest);
    if (lm) s.set("run", "lm_checkpoint", *lm);
    if (vocab) s.set("run", "vocab", *vocab);
    if (beam) s.set("decode", "beam", std::to_string(*beam));
    if (lambda) s.set("decode", "lambda", fmt(*lambda));
    if (alpha) s.set("decode", "alpha", fmt(*alpha));
    if (max_len) s.set("decode", "max_length", std::to_string(*max_len));
    if (int rc = s.apply()) return rc;
    what = "decode";
    st = mute_decode(s.config(), dir_or_null(out));
  } else if (*sc) {
    if (nbest) s.set("run", "nbest", *nbest);
    if (sc_manifest) s.set("run", "manifest", *sc_manifest);
    if (sc_vocab) s.set("run", "vocab", *sc_vocab);
    if (no_diffs) s.set("run", "per_utterance", "false");
    if (int rc = s.apply()) return rc;
    what = "score";
    st = mute_score(s.config(), dir_or_null(out));
  } else if (*sw) {
    if (ratios) s.set("experiment", "ratios", *ratios);
    if (seeds) s.set("experiment", "seeds", *seeds);
    if (variants) s.set("experiment", "variants", *variants);
    if (jobs) s.set("experiment", "jobs", std::to_string(*jobs));
    if (sw_corpus) s.set("run", "corpus_dir", *sw_corpus);
    if (int rc = s.apply()) return rc;
    what = "sweep";
    st = mute_sweep(s.config(), dir_or_null(out), quiet ? 0 : 1);
  }
  if (st != MUTE_OK) return fail(st, what);
  return 0;
}
