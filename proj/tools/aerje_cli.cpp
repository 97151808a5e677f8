// Command-line front end for the aerje shared library. Everything goes
// through the C API in aerje/aerje.h; this file owns only argument parsing
// and printing.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aerje/aerje.h"

using nlohmann::json;

namespace {

// Takes ownership of a C string result and frees it.
std::string take(char* s) {
  if (!s) return {};
  std::string out(s);
  aerje_string_free(s);
  return out;
}

void check(aerje_status st, const std::string& what) {
  if (st == AERJE_OK) return;
  std::cerr << "error: " << what << ": " << aerje_last_error() << "\n";
  std::exit(1);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(1);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    std::exit(1);
  }
  out << content;
}

void print_stats(const std::string& stats_json) {
  if (stats_json.empty()) return;
  json j = json::parse(stats_json, nullptr, false);
  if (j.is_discarded()) return;
  std::cout << j.dump(2) << "\n";
}

struct GlobalOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir = "out";
};

json load_config(const GlobalOpts& g) {
  json cfg = json::object();
  if (!g.config_path.empty()) {
    cfg = json::parse(read_text_file(g.config_path), nullptr, false);
    if (cfg.is_discarded()) {
      std::cerr << "error: config file is not valid JSON: " << g.config_path << "\n";
      std::exit(1);
    }
  }
  if (g.seed) cfg["seed"] = *g.seed;
  return cfg;
}

void run_rq_command(int rq, const GlobalOpts& g) {
  json cfg = load_config(g);
  char* table = nullptr;
  check(aerje_run_rq(rq, cfg.dump().c_str(), g.out_dir.c_str(), &table),
        "rq" + std::to_string(rq));
  std::string table_json = take(table);
  json t = json::parse(table_json);
  std::printf("rq%d (%s)\n", rq, t.value("name", "").c_str());
  std::printf("%-24s %8s %8s %8s | %8s %8s %8s\n", "row", "ent-P", "ent-R", "ent-F1", "rel-P",
              "rel-R", "rel-F1");
  for (const auto& row : t["rows"]) {
    const auto& e = row["entity"];
    const auto& r = row["relation"];
    std::printf("%-24s %8.2f %8.2f %8.2f | %8.2f %8.2f %8.2f\n",
                row.value("label", "").c_str(), e.value("precision", 0.0) * 100,
                e.value("recall", 0.0) * 100, e.value("f1", 0.0) * 100,
                r.value("precision", 0.0) * 100, r.value("recall", 0.0) * 100,
                r.value("f1", 0.0) * 100);
  }
  std::cout << "table: " << g.out_dir << "/rq" << rq << "/table.json\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aerje: joint API entity and relation extraction"};
  app.require_subcommand(1);

  GlobalOpts global;
  app.add_option("--config", global.config_path, "JSON config file")->expected(1);
  uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "seed override");
  app.add_option("--out-dir", global.out_dir, "output directory for experiment runs");

  // ingest ------------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "post dump -> tokenized sentences JSONL");
  std::string in_posts, in_out, in_tag;
  bool in_keep_inline = false;
  uint64_t in_sample = 0;
  ingest->add_option("--posts", in_posts, "Posts.xml or JSONL mirror")->required();
  ingest->add_option("--out", in_out, "sentences JSONL output")->required();
  ingest->add_option("--tag", in_tag, "keep questions with this tag");
  ingest->add_flag("--keep-inline-code", in_keep_inline, "keep inline <code> span text");
  ingest->add_option("--sample", in_sample, "randomly sample this many questions (uses --seed)");

  // filter ------------------------------------------------------------------
  auto* filter = app.add_subcommand("filter", "keep sentences with API-like candidate tokens");
  std::string f_sentences, f_inventory, f_out;
  filter->add_option("--sentences", f_sentences, "sentences JSONL")->required();
  filter->add_option("--inventory", f_inventory, "API inventory file")->required();
  filter->add_option("--out", f_out, "kept sentences JSONL")->required();

  // split -------------------------------------------------------------------
  auto* split = app.add_subcommand("split", "seeded train/test split of a gold dataset");
  std::string sp_gold, sp_train, sp_test;
  double sp_ratio = 0.8;
  split->add_option("--gold", sp_gold, "gold JSONL")->required();
  split->add_option("--ratio", sp_ratio, "train fraction (default 0.8)");
  split->add_option("--train-out", sp_train, "train JSONL output")->required();
  split->add_option("--test-out", sp_test, "test JSONL output")->required();

  // augment -----------------------------------------------------------------
  auto* augment = app.add_subcommand("augment", "morphology and verb mutations of a gold set");
  std::string ag_gold, ag_syn, ag_out;
  bool ag_combined = false;
  augment->add_option("--gold", ag_gold, "gold JSONL (already split)")->required();
  augment->add_option("--synonyms", ag_syn, "synonym JSONL")->required();
  augment->add_option("--out", ag_out, "augmented gold JSONL")->required();
  augment->add_flag("--combined", ag_combined, "also rewrite all qualified entities at once");

  // train-classifier ----------------------------------------------------------
  auto* trainc = app.add_subcommand("train-classifier", "train the relation classifier");
  std::string tc_train, tc_dir;
  trainc->add_option("--train", tc_train, "gold JSONL (relation sentences)")->required();
  trainc->add_option("--model-dir", tc_dir, "checkpoint directory")->required();

  // train-extractor -----------------------------------------------------------
  auto* traine = app.add_subcommand("train-extractor", "fine-tune the seq2seq extractor");
  std::string te_train, te_dir;
  traine->add_option("--train", te_train, "gold JSONL")->required();
  traine->add_option("--model-dir", te_dir, "checkpoint directory")->required();

  // extract -------------------------------------------------------------------
  auto* extract = app.add_subcommand("extract", "run the extractor over sentences");
  std::string ex_model, ex_classifier = "keyword", ex_sentences, ex_out, ex_mode = "dynamic";
  int ex_topn = 3;
  extract->add_option("--model", ex_model, "adapter checkpoint directory")->required();
  extract->add_option("--classifier", ex_classifier, "'keyword' or classifier checkpoint dir");
  extract->add_option("--sentences", ex_sentences, "sentences or gold JSONL")->required();
  extract->add_option("--out", ex_out, "predictions JSONL")->required();
  extract->add_option("--prompt-mode", ex_mode, "dynamic|static");
  extract->add_option("--topn", ex_topn, "dynamic prompt size");

  // evaluate ------------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold");
  std::string ev_gold, ev_pred, ev_out;
  evaluate->add_option("--gold", ev_gold, "gold JSONL")->required();
  evaluate->add_option("--pred", ev_pred, "predictions JSONL")->required();
  evaluate->add_option("--out", ev_out, "write the JSON report here");

  // kshot-sample ---------------------------------------------------------------
  auto* kshot = app.add_subcommand("kshot-sample", "k sentences per class from a train set");
  std::string ks_train, ks_out;
  int ks_k = 1;
  kshot->add_option("--train", ks_train, "gold JSONL")->required();
  kshot->add_option("--k", ks_k, "shots per class")->required();
  kshot->add_option("--out", ks_out, "sample JSONL output")->required();

  // rq1..rq5 -------------------------------------------------------------------
  for (int rq = 1; rq <= 5; ++rq) {
    app.add_subcommand("rq" + std::to_string(rq), "research-question harness " + std::to_string(rq));
  }

  // sel -------------------------------------------------------------------------
  auto* sel = app.add_subcommand("sel", "structured extraction language codec");
  sel->require_subcommand(1);
  auto* sel_encode = sel->add_subcommand("encode", "record JSON -> SEL string");
  std::string se_record;
  sel_encode->add_option("--record", se_record, "record JSON (or @file)")->required();
  auto* sel_decode = sel->add_subcommand("decode", "SEL string -> record JSON");
  std::string sd_sel, sd_text;
  sel_decode->add_option("--sel", sd_sel, "SEL string")->required();
  sel_decode->add_option("--text", sd_text, "the sentence the SEL refers to");
  auto* sel_validate = sel->add_subcommand("validate", "strict grammar check");
  std::string sv_sel;
  sel_validate->add_option("--sel", sv_sel, "SEL string")->required();

  // plot --------------------------------------------------------------------------
  auto* plot = app.add_subcommand("plot", "render an rq table JSON as an SVG chart");
  std::string pl_table, pl_out;
  plot->add_option("--table", pl_table, "table.json from an rq run")->required();
  plot->add_option("--out", pl_out, "SVG output path")->required();

  // Global flags remain usable after the subcommand name.
  for (auto* sub : app.get_subcommands(nullptr)) {
    sub->fallthrough();
    for (auto* nested : sub->get_subcommands(nullptr)) nested->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) global.seed = seed_value;

  json cfg = load_config(global);
  uint64_t seed = cfg.value("seed", uint64_t{0});

  if (*ingest) {
    json opts{{"tag", in_tag}, {"keep_inline_code", in_keep_inline},
              {"sample_posts", in_sample}, {"seed", seed}};
    char* stats = nullptr;
    check(aerje_ingest_file(in_posts.c_str(), opts.dump().c_str(), in_out.c_str(), &stats),
          "ingest");
    print_stats(take(stats));
  } else if (*filter) {
    aerje_inventory* inv = nullptr;
    check(aerje_inventory_load(f_inventory.c_str(), &inv), "load inventory");
    char* stats = nullptr;
    aerje_status st = aerje_filter_file(inv, f_sentences.c_str(), f_out.c_str(), &stats);
    aerje_inventory_free(inv);
    check(st, "filter");
    print_stats(take(stats));
  } else if (*split) {
    char* stats = nullptr;
    check(aerje_split_file(sp_gold.c_str(), sp_ratio, seed, sp_train.c_str(), sp_test.c_str(),
                           &stats),
          "split");
    print_stats(take(stats));
  } else if (*augment) {
    json opts{{"combined", ag_combined}};
    char* stats = nullptr;
    check(aerje_augment_file(ag_gold.c_str(), ag_syn.c_str(), opts.dump().c_str(),
                             ag_out.c_str(), &stats),
          "augment");
    print_stats(take(stats));
  } else if (*trainc) {
    json ccfg = cfg.value("classifier", json::object());
    ccfg["seed"] = seed;
    char* metrics = nullptr;
    check(aerje_train_classifier(tc_train.c_str(), ccfg.dump().c_str(), tc_dir.c_str(), &metrics),
          "train-classifier");
    print_stats(take(metrics));
  } else if (*traine) {
    json fcfg = cfg.value("finetune", json::object());
    for (const char* key : {"prompt_mode", "top_n", "classifier_spec", "backbone_name"}) {
      if (cfg.contains(key)) fcfg[key] = cfg[key];
    }
    fcfg["seed"] = seed;
    char* metrics = nullptr;
    check(aerje_train_extractor(te_train.c_str(), fcfg.dump().c_str(), te_dir.c_str(), &metrics),
          "train-extractor");
    print_stats(take(metrics));
  } else if (*extract) {
    aerje_adapter* adapter = nullptr;
    check(aerje_adapter_open(ex_model.c_str(), &adapter), "open adapter");
    aerje_classifier* classifier = nullptr;
    if (ex_mode == "dynamic") {
      check(aerje_classifier_open(ex_classifier.c_str(), &classifier), "open classifier");
    }
    json opts{{"prompt_mode", ex_mode}, {"top_n", ex_topn}};
    char* stats = nullptr;
    aerje_status st = aerje_extract_file(adapter, classifier, opts.dump().c_str(),
                                         ex_sentences.c_str(), ex_out.c_str(), &stats);
    aerje_classifier_free(classifier);
    aerje_adapter_free(adapter);
    check(st, "extract");
    print_stats(take(stats));
  } else if (*evaluate) {
    char* report = nullptr;
    check(aerje_evaluate_file(ev_gold.c_str(), ev_pred.c_str(), &report), "evaluate");
    std::string report_json = take(report);
    json j = json::parse(report_json);
    std::cout << j.value("formatted", "");
    if (!ev_out.empty()) {
      j.erase("formatted");
      write_text_file(ev_out, j.dump(2));
    }
  } else if (*kshot) {
    char* stats = nullptr;
    check(aerje_kshot_sample_file(ks_train.c_str(), ks_k, seed, ks_out.c_str(), &stats),
          "kshot-sample");
    print_stats(take(stats));
  } else if (*sel) {
    if (*sel_encode) {
      std::string record = se_record;
      if (!record.empty() && record[0] == '@') record = read_text_file(record.substr(1));
      char* out = nullptr;
      check(aerje_sel_encode(record.c_str(), &out), "sel encode");
      std::cout << take(out) << "\n";
    } else if (*sel_decode) {
      char* out = nullptr;
      check(aerje_sel_decode(sd_sel.c_str(), sd_text.c_str(), &out), "sel decode");
      std::cout << json::parse(take(out)).dump(2) << "\n";
    } else if (*sel_validate) {
      char* out = nullptr;
      check(aerje_sel_validate(sv_sel.c_str(), &out), "sel validate");
      std::string diags = take(out);
      json j = json::parse(diags);
      if (j.empty()) {
        std::cout << "valid\n";
      } else {
        std::cout << j.dump(2) << "\n";
        return 2;
      }
    }
  } else if (*plot) {
    check(aerje_plot_table(read_text_file(pl_table).c_str(), pl_out.c_str()), "plot");
    std::cout << "wrote " << pl_out << "\n";
  } else {
    for (int rq = 1; rq <= 5; ++rq) {
      if (app.got_subcommand("rq" + std::to_string(rq))) {
        run_rq_command(rq, global);
        return 0;
      }
    }
  }
  return 0;
}
