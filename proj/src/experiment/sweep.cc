// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

#include "experiment/sweep.h"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "common/errors.h"
#include "data/corpus.h"
#include "experiment/commands.h"
#include "model/checkpoint.h"
#include "scoring/scoring.h"
#include "search/nbest.h"
#include "search/search.h"
#include "train/trainer.h"

namespace mute::experiment {

namespace fs = std::filesystem;

std::string cell_name(Variant variant, double ratio) {
  return std::string(variant_name(variant)) + "_r" + short_double(ratio);
}

namespace {

[[noreturn]] void rethrow_tagged(std::exception_ptr e, const std::string& tag) {
  try {
    std::rethrow_exception(e);
  } catch (const ParseError& x) {
    throw ParseError(tag + ": " + x.what());
  } catch (const DimensionError& x) {
    throw DimensionError(tag + ": " + x.what());
  } catch (const IndexError& x) {
    throw IndexError(tag + ": " + x.what());
  } catch (const ContractError& x) {
    throw ContractError(tag + ": " + x.what());
  } catch (const NumericError& x) {
    throw NumericError(tag + ": " + x.what());
  } catch (const UndefinedRateError& x) {
    throw UndefinedRateError(tag + ": " + x.what());
  } catch (const IoError& x) {
    throw IoError(tag + ": " + x.what());
  } catch (const std::exception& x) {
    throw std::runtime_error(tag + ": " + x.what());
  }
}

// Stage-1 tasks come first; a cell becomes runnable once the stage-1 task
// of its seed has finished.
struct Task {
  std::size_t seed_index;
  std::optional<std::size_t> cell;  // empty: stage 1 of the seed
  std::string tag;
};

class Scheduler {
 public:
  Scheduler(std::vector<Task> tasks, std::size_t seeds)
      : tasks_(std::move(tasks)), started_(tasks_.size()), ready_(seeds) {}

  // Runs work(task) on up to jobs threads; rethrows the first failure
  // tagged with its task.
  template <typename Work>
  void run(std::size_t jobs, Work work) {
    std::vector<std::thread> threads;
    for (std::size_t j = 0; j < jobs; ++j) {
      threads.emplace_back([&] { loop(work); });
    }
    for (auto& t : threads) t.join();
    if (error_) rethrow_tagged(error_, error_tag_);
  }

 private:
  template <typename Work>
  void loop(Work& work) {
    while (true) {
      std::size_t pick = 0;
      {
        std::unique_lock<std::mutex> lock(mu_);
        bool found = false;
        cv_.wait(lock, [&] {
          if (error_) return true;
          bool pending = false;
          for (std::size_t i = 0; i < tasks_.size(); ++i) {
            if (started_[i]) continue;
            pending = true;
            const Task& t = tasks_[i];
            if (!t.cell || ready_[t.seed_index]) {
              pick = i;
              found = true;
              return true;
            }
          }
          return !pending;
        });
        if (!found) return;
        started_[pick] = true;
      }
      try {
        work(tasks_[pick]);
        std::lock_guard<std::mutex> lock(mu_);
        if (!tasks_[pick].cell) ready_[tasks_[pick].seed_index] = true;
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu_);
        if (!error_) {
          error_ = std::current_exception();
          error_tag_ = tasks_[pick].tag;
        }
      }
      cv_.notify_all();
    }
  }

  std::vector<Task> tasks_;
  std::vector<bool> started_;
  std::vector<bool> ready_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::exception_ptr error_;
  std::string error_tag_;
};

double decode_and_score(const LasModel& model,
                        const std::vector<data::Utterance>& utts,
                        const data::Vocabulary& vocab,
                        const DecodeConfig& decode, const std::string& stem) {
  std::vector<search::UtteranceNBest> records;
  std::vector<scoring::ScoredUtterance> scored;
  for (const data::Utterance& u : utts) {
    search::NBestList hyps =
        search::beam_search(model, u.features, decode.beam, decode.max_length,
                            nullptr, decode.fusion);
    scoring::ScoredUtterance s;
    s.id = u.id;
    s.ref = scoring::split_words(vocab.render(u.tokens));
    for (const auto& h : hyps) {
      s.nbest.push_back(scoring::split_words(vocab.render(h.transcript())));
    }
    scored.push_back(std::move(s));
    records.push_back({u.id, std::move(hyps)});
  }
  search::write_nbest(stem + ".nbest", records, vocab);
  const scoring::WerReport report = scoring::wer(scored, true);
  write_file(stem + ".report", scoring::render_report(report, true));
  return report.wer;
}

Spread spread(const std::vector<double>& v) {
  Spread s;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  return s;
}

}  // namespace

SweepResult cmd_sweep(ExperimentConfig config, const std::string& out_dir,
                      std::ostream* progress) {
  const SweepConfig& sw = config.sweep;
  if (out_dir.empty()) throw ContractError("no output directory given");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir);
  }
  config.run.command = "sweep";
  config.run.stage = 2;
  write_file((fs::path(out_dir) / kResolvedConfigName).string(), config.render());

  const std::size_t n_seeds = sw.seeds.size();
  std::vector<SweepCell> cells;
  for (Variant v : sw.variants) {
    for (double r : sw.ratios) {
      for (std::uint64_t s : sw.seeds) {
        SweepCell c;
        c.variant = v;
        c.ratio = r;
        c.seed = s;
        cells.push_back(c);
      }
    }
  }
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    tasks.push_back({i, std::nullopt,
                     "seed " + std::to_string(sw.seeds[i]) + " stage 1"});
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::size_t seed_index = c % n_seeds;
    tasks.push_back({seed_index, c,
                     "cell " + std::string(variant_name(cells[c].variant)) +
                         " ratio " + short_double(cells[c].ratio) + " seed " +
                         std::to_string(cells[c].seed)});
  }

  std::vector<data::Corpora> corpora(n_seeds);
  std::vector<std::optional<LasModel>> stage1(n_seeds);
  std::vector<double> stage1_secs(n_seeds, 0.0);
  std::mutex log_mu;
  auto report = [&](const std::string& line) {
    if (!progress) return;
    std::lock_guard<std::mutex> lock(log_mu);
    *progress << line << std::endl;
  };
  auto seed_dir = [&](std::size_t i) {
    return fs::path(out_dir) / ("seed_" + std::to_string(sw.seeds[i]));
  };

  auto work = [&](const Task& task) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t i = task.seed_index;
    const std::uint64_t seed = sw.seeds[i];
    if (!task.cell) {
      corpora[i] = obtain_corpus(config, config.corpus_for_seed(seed));
      const fs::path dir = seed_dir(i) / "stage1";
      fs::create_directories(dir);
      train::TrainConfig t1 = config.stage1;
      t1.seed = seed;
      train::Trainer tr(LasModel::create(config.model, seed), t1,
                        {corpora[i].train, corpora[i].valid, corpora[i].text});
      tr.run();
      write_file((dir / kTrainLog).string(), train::render_log(tr.log()));
      save_model(tr.best_model(), (dir / kBestCheckpoint).string());
      stage1[i] = tr.best_model();
    } else {
      SweepCell& cell = cells[*task.cell];
      const data::Corpora& corpus = corpora[i];
      const fs::path dir = seed_dir(i) / cell_name(cell.variant, cell.ratio);
      fs::create_directories(dir);
      train::TrainConfig t2 = config.stage2;
      t2.seed = seed;
      t2.ratio = cell.ratio;
      t2.validate();
      train::Trainer tr(train::reinit_decoder_for_stage2(
                            *stage1[i], cell.variant, seed, t2.reinit_decoder),
                        t2, {corpus.train, corpus.valid, corpus.text});
      tr.run();
      write_file((dir / kTrainLog).string(), train::render_log(tr.log()));
      save_model(tr.best_model(), (dir / kBestCheckpoint).string());
      const LasModel& best = tr.best_model();
      cell.best_step = tr.best_step();
      cell.steps = tr.step();
      cell.text_steps = tr.log().back().text_steps;
      for (const auto& row : tr.log()) {
        if (row.step == cell.best_step) cell.valid_wer = row.valid_wer;
      }
      cell.wer_clean = decode_and_score(best, corpus.test_clean, corpus.vocab,
                                        config.decode,
                                        (dir / "test_clean").string());
      cell.wer_noisy = decode_and_score(best, corpus.test_noisy, corpus.vocab,
                                        config.decode,
                                        (dir / "test_noisy").string());
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    if (task.cell) {
      cells[*task.cell].seconds = secs;
    } else {
      stage1_secs[i] = secs;
    }
    char buf[96];
    if (task.cell) {
      std::snprintf(buf, sizeof(buf), " wer_clean %.4f wer_noisy %.4f",
                    cells[*task.cell].wer_clean, cells[*task.cell].wer_noisy);
    } else {
      buf[0] = '\0';
    }
    char tail[32];
    std::snprintf(tail, sizeof(tail), " (%.1fs)", secs);
    report(task.tag + buf + tail);
  };

  std::size_t jobs = sw.jobs;
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, tasks.size());
  Scheduler(std::move(tasks), n_seeds).run(jobs, work);

  SweepResult result;
  result.cells = cells;
  result.rows = aggregate(cells, sw.variants, sw.ratios);
  result.stage1_seconds = stage1_secs;
  const fs::path base(out_dir);
  write_file((base / kResultsFile).string(), render_results(result.cells));
  write_file((base / kSummaryFile).string(), render_summary(result.rows));
  write_file((base / kTableFile).string(), render_table(result.rows));
  return result;
}

std::vector<SweepRow> aggregate(const std::vector<SweepCell>& cells,
                                const std::vector<Variant>& variants,
                                const std::vector<double>& ratios) {
  std::vector<SweepRow> rows;
  for (Variant v : variants) {
    for (double r : ratios) {
      std::vector<double> clean, noisy;
      for (const SweepCell& c : cells) {
        if (c.variant == v && c.ratio == r) {
          clean.push_back(c.wer_clean);
          noisy.push_back(c.wer_noisy);
        }
      }
      if (clean.empty()) {
        throw ContractError("sweep: no results for " + cell_name(v, r));
      }
      SweepRow row;
      row.variant = v;
      row.ratio = r;
      row.seeds = clean.size();
      row.clean = spread(clean);
      row.noisy = spread(noisy);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string render_results(const std::vector<SweepCell>& cells) {
  std::ostringstream out;
  out << "#variant\tratio\tseed\twer_clean\twer_noisy\tvalid_wer\tbest_step"
         "\ttext_steps\tsteps\n";
  for (const SweepCell& c : cells) {
    out << variant_name(c.variant) << '\t' << short_double(c.ratio) << '\t'
        << c.seed << '\t' << format_double(c.wer_clean) << '\t'
        << format_double(c.wer_noisy) << '\t' << format_double(c.valid_wer)
        << '\t' << c.best_step << '\t' << c.text_steps << '\t' << c.steps
        << '\n';
  }
  return out.str();
}

std::vector<SweepCell> parse_results(const std::string& text) {
  std::vector<SweepCell> cells;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split(line, '\t');
    if (f.size() != 9) throw ParseError("results: expected 9 fields", no);
    try {
      SweepCell c;
      c.variant = parse_variant(f[0]);
      c.ratio = std::stod(f[1]);
      c.seed = std::stoull(f[2]);
      c.wer_clean = std::stod(f[3]);
      c.wer_noisy = std::stod(f[4]);
      c.valid_wer = std::stod(f[5]);
      c.best_step = std::stoull(f[6]);
      c.text_steps = std::stoull(f[7]);
      c.steps = std::stoull(f[8]);
      cells.push_back(c);
    } catch (const std::logic_error& e) {
      throw ParseError(std::string("results: bad field: ") + e.what(), no);
    }
  }
  return cells;
}

std::string render_summary(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "#variant\tratio\tseeds\tclean_mean\tclean_min\tclean_max"
         "\tnoisy_mean\tnoisy_min\tnoisy_max\n";
  for (const SweepRow& r : rows) {
    out << variant_name(r.variant) << '\t' << short_double(r.ratio) << '\t'
        << r.seeds << '\t' << format_double(r.clean.mean) << '\t'
        << format_double(r.clean.min) << '\t' << format_double(r.clean.max)
        << '\t' << format_double(r.noisy.mean) << '\t'
        << format_double(r.noisy.min) << '\t' << format_double(r.noisy.max)
        << '\n';
  }
  return out.str();
}

std::string render_table(const std::vector<SweepRow>& rows) {
  auto cell = [](const Spread& s) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%6.2f [%6.2f, %6.2f]", 100.0 * s.mean,
                  100.0 * s.min, 100.0 * s.max);
    return std::string(buf);
  };
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %6s %5s  %-24s  %-24s\n", "variant",
                "ratio", "seeds", "test-clean WER%", "test-noisy WER%");
  out << line;
  for (const SweepRow& r : rows) {
    std::snprintf(line, sizeof(line), "%-10s %6s %5zu  %-24s  %-24s\n",
                  variant_name(r.variant), short_double(r.ratio).c_str(),
                  r.seeds, cell(r.clean).c_str(), cell(r.noisy).c_str());
    out << line;
  }
  return out.str();
}

}  // namespace mute::experiment
