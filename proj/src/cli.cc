// Copyright 2026 The skipshield Authors. All Rights Reserved.
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

#include "skipshield/cli.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "skipshield/asm.h"
#include "skipshield/campaign.h"
#include "skipshield/classify.h"
#include "skipshield/harden.h"
#include "skipshield/liveness.h"
#include "skipshield/report.h"
#include "skipshield/verifier.h"

namespace skipshield {
namespace {

using nlohmann::json;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    throw Error(ErrorCode::kConfig, "cannot write " + path);
  }
}

// `file:line: severity: message`; the line is omitted when unknown.
void Diagnose(std::ostream& err, const std::string& file, const Error& e) {
  err << (file.empty() ? "skipshield" : file);
  if (e.line() > 0) err << ':' << e.line();
  err << ": error: " << e.what() << " [" << ErrorCodeName(e.code()) << "]\n";
}

std::string Fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

struct HardenOptions {
  std::vector<std::string> scopes;
  std::string it_strategy = "branch";
  bool no_spill = false;
};

void AddHardenOptions(CLI::App* cmd, HardenOptions& o) {
  cmd->add_option("--scope", o.scopes,
                  "Harden only label1:label2 (end excluded); repeatable");
  cmd->add_option("--it-strategy", o.it_strategy, "it-block rewriting")
      ->check(CLI::IsMember({"branch", "it"}));
  cmd->add_flag("--no-spill", o.no_spill,
                "Fail instead of spilling live registers for scratch");
}

HardeningPolicy MakePolicy(const HardenOptions& o) {
  HardeningPolicy policy;
  for (const std::string& scope : o.scopes) {
    const size_t colon = scope.find(':');
    if (colon == std::string::npos || colon == 0 ||
        colon + 1 == scope.size()) {
      throw Error(ErrorCode::kConfig,
                  "scope '" + scope + "' is not label1:label2");
    }
    policy.ranges.push_back({scope.substr(0, colon), scope.substr(colon + 1)});
  }
  policy.it_strategy = o.it_strategy == "it" ? ItStrategy::kDuplicatedIt
                                             : ItStrategy::kBranchExpansion;
  policy.allow_stack_spill = !o.no_spill;
  return policy;
}

json RecordsJson(const HardeningReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    json scratch = json::array();
    for (Reg reg : r.scratch) scratch.push_back(std::string(RegName(reg)));
    records.push_back(
        {{"line", r.line},
         {"original", r.original},
         {"class", std::string(ClassName(r.classification.cls))},
         {"recipe", std::string(RecipeName(r.classification.recipe))},
         {"replacement_length", r.replacement_length},
         {"scratch", scratch},
         {"spilled", r.spilled}});
  }
  return {{"records", records},
          {"original_in_scope", report.original_in_scope},
          {"hardened_in_scope", report.hardened_in_scope},
          {"original_total", report.original_total},
          {"hardened_total", report.hardened_total}};
}

int RunClassify(const std::string& file, bool as_json, std::ostream& out) {
  const Program program = ParseProgram(ReadFile(file));
  const LivenessMap live = AnalyzeLiveness(program);
  json records = json::array();
  int k = 0;
  for (const Instruction* inst : program.Instructions()) {
    const Classification c = Classify(*inst, live.After(k).flags);
    ++k;
    if (as_json) {
      records.push_back({{"line", inst->line},
                         {"mnemonic", std::string(MnemonicName(inst->mnemonic))},
                         {"class", std::string(ClassName(c.cls))},
                         {"recipe", std::string(RecipeName(c.recipe))},
                         {"reason", c.reason}});
    } else {
      out << file << ':' << inst->line << ": " << EmitInstruction(*inst)
          << " -> " << ClassName(c.cls) << " / " << RecipeName(c.recipe);
      if (!c.reason.empty()) out << " (" << c.reason << ')';
      out << '\n';
    }
  }
  if (as_json) out << records.dump(2) << '\n';
  return kExitOk;
}

int RunHarden(const std::string& file, const std::string& output,
              const std::string& report_path, const HardenOptions& options,
              bool as_json, std::ostream& out) {
  const Program program = ParseProgram(ReadFile(file));
  HardeningReport report;
  const Program hardened = HardenProgram(program, MakePolicy(options), &report);
  const std::string text = EmitProgram(hardened);
  if (!output.empty()) {
    WriteFile(output, text);
  } else if (!as_json) {
    out << text;
  }
  if (!report_path.empty()) WriteFile(report_path, RecordsJson(report).dump(2));
  if (as_json) out << RecordsJson(report).dump(2) << '\n';
  return kExitOk;
}

int RunVerify(const VerifyOptions& options, const std::string& entry,
              bool as_json, std::ostream& out) {
  const std::vector<CatalogResult> results = VerifyCatalog(options, entry);
  if (results.empty()) {
    throw Error(ErrorCode::kConfig, "no catalog entry matches '" + entry + "'");
  }
  bool all_expected = true;
  json rows = json::array();
  char line[160];
  if (!as_json) {
    std::snprintf(line, sizeof(line), "%-28s %-6s %12s %10s  %-16s %8s\n",
                  "recipe", "width", "states", "scenarios", "verdict", "time");
    out << line;
  }
  for (const CatalogResult& r : results) {
    const bool ok = r.error.empty() && r.verdict.passed == r.expect_pass;
    all_expected = all_expected && ok;
    std::string verdict = !r.error.empty()    ? "ERROR"
                          : r.verdict.passed ? "PASS"
                                             : "FAIL";
    if (r.error.empty() && !r.expect_pass && !r.verdict.passed) {
      verdict += " (expected)";
    }
    if (r.error.empty() && !r.verdict.exhaustive) verdict += " sampled";
    if (as_json) {
      json row = {{"name", r.name},
                  {"recipe", r.recipe},
                  {"width", options.width},
                  {"states_explored", r.verdict.states_explored},
                  {"scenarios", r.verdict.scenarios},
                  {"exhaustive", r.verdict.exhaustive},
                  {"passed", r.verdict.passed},
                  {"expect_pass", r.expect_pass},
                  {"seconds", r.verdict.seconds}};
      if (!r.error.empty()) row["error"] = r.error;
      if (r.verdict.counterexample) {
        const Counterexample& cx = *r.verdict.counterexample;
        row["property_failed"] =
            std::string(PropertyName(r.verdict.property_failed));
        row["counterexample"] = {
            {"skip", cx.skip ? json(*cx.skip) : json(nullptr)},
            {"observable", cx.mismatch.observable},
            {"expected", cx.mismatch.expected},
            {"actual", cx.mismatch.actual}};
      }
      rows.push_back(std::move(row));
    } else {
      std::snprintf(line, sizeof(line), "%-28s %-6d %12llu %10d  %-16s %7ss\n",
                    r.name.c_str(), options.width,
                    static_cast<unsigned long long>(r.verdict.states_explored),
                    r.verdict.scenarios, verdict.c_str(),
                    Fixed(r.verdict.seconds, 2).c_str());
      out << line;
      if (!r.error.empty()) out << "  error: " << r.error << '\n';
      if (r.verdict.counterexample) {
        const Counterexample& cx = *r.verdict.counterexample;
        out << "  " << PropertyName(r.verdict.property_failed)
            << " failed, skip "
            << (cx.skip ? std::to_string(*cx.skip) : std::string("none"))
            << ": " << cx.mismatch.observable << " expected "
            << cx.mismatch.expected << " got " << cx.mismatch.actual << '\n';
      }
    }
  }
  if (as_json) out << rows.dump(2) << '\n';
  return all_expected ? kExitOk : kExitCheckFailed;
}

int RunSimulate(const std::string& file, const std::string& config_path,
                const std::string& output, int threads, bool as_json,
                std::ostream& out) {
  const Program program = ParseProgram(ReadFile(file));
  CampaignConfig config = ParseCampaignConfig(ReadFile(config_path));
  if (threads > 0) config.threads = threads;
  const CampaignReport report = RunCampaign(program, config);
  const std::string text = CampaignReportToJson(report);
  if (!output.empty()) WriteFile(output, text);
  if (as_json) {
    out << text << '\n';
  } else {
    out << "sites " << report.total_sites << " (reference run "
        << report.reference_steps << " instructions"
        << (report.capped ? ", capped" : "") << "): silent " << report.silent
        << ", corrupted " << report.corrupted << ", crashed " << report.crashed
        << '\n';
    for (const SiteResult& s : report.sites) {
      if (s.outcome == Outcome::kSilent) continue;
      out << file << ':' << s.line << ": note: skip #" << s.site << ' '
          << OutcomeName(s.outcome) << ": " << s.detail << '\n';
    }
    out << (report.tolerant ? "tolerant\n" : "not tolerant\n");
  }
  return report.tolerant ? kExitOk : kExitCheckFailed;
}

void PrintMetric(std::ostream& out, const char* name, const Metric& m) {
  char line[128];
  std::snprintf(line, sizeof(line), "  %-22s %8lld -> %8lld  %+7.1f%%\n", name,
                static_cast<long long>(m.original),
                static_cast<long long>(m.hardened), m.increase_percent);
  out << line;
}

int RunReport(const std::string& file, const std::string& cycle_model_path,
              const HardenOptions& options, bool as_json, std::ostream& out) {
  const Program program = ParseProgram(ReadFile(file));
  const CycleModel model = cycle_model_path.empty()
                               ? CycleModel{}
                               : ParseCycleModel(ReadFile(cycle_model_path));
  HardeningReport hr;
  const Program hardened = HardenProgram(program, MakePolicy(options), &hr);
  const OverheadReport report = MeasureOverhead(program, hardened, hr, model);
  if (as_json) {
    out << OverheadReportToJson(report) << '\n';
    return kExitOk;
  }
  const std::pair<const char*, const ScopeOverhead*> scopes[] = {
      {"program", &report.program}, {"in scope", &report.in_scope}};
  for (const auto& [name, scope] : scopes) {
    out << name << ":\n";
    PrintMetric(out, "instructions", scope->instructions);
    PrintMetric(out, "code bytes (estimate)", scope->code_bytes);
    PrintMetric(out, "cycles (estimate)", scope->cycles);
  }
  out << "recipes:\n";
  for (const auto& [name, r] : report.recipes) {
    out << "  " << name << ": " << r.instances << " instruction(s) -> "
        << r.replacement_instructions << '\n';
  }
  return kExitOk;
}

}  // namespace

int Main(int argc, const char* const* argv, std::ostream& out,
         std::ostream& err) {
  CLI::App app{"Instruction-skip hardening for Thumb-2 assembly"};
  app.name("skipshield");
  app.require_subcommand(1);

  bool as_json = false;
  std::string file;

  auto* classify = app.add_subcommand("classify", "Classify each instruction");
  classify->add_option("file", file, "Assembly file")->required();
  classify->add_flag("--json", as_json, "JSON output");

  HardenOptions harden_options;
  std::string output;
  std::string report_path;
  auto* harden = app.add_subcommand("harden", "Rewrite a program");
  harden->add_option("file", file, "Assembly file")->required();
  harden->add_option("-o,--output", output, "Hardened assembly output");
  harden->add_option("--report", report_path, "Hardening report (JSON)");
  AddHardenOptions(harden, harden_options);
  harden->add_flag("--json", as_json, "Print the hardening report as JSON");

  VerifyOptions verify_options;
  std::string entry;
  auto* verify = app.add_subcommand("verify", "Prove the built-in catalog");
  verify->add_option("--width", verify_options.width, "Register width W")
      ->check(CLI::Range(kMinWidth, kMaxWidth));
  verify->add_option("--entry", entry, "Only entries whose name or recipe "
                                       "contains this text");
  verify->add_option("--threads", verify_options.threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  verify->add_option("--max-log2-states", verify_options.max_log2_states,
                     "Largest exhaustively enumerated space, as log2")
      ->check(CLI::Range(1, 62));
  verify->add_option("--sample", verify_options.sample_states,
                     "Sample this many initial states beyond the limit");
  verify->add_option("--seed", verify_options.seed, "Sampling seed");
  verify->add_flag("--json", as_json, "JSON output");

  std::string config_path;
  int threads = 0;
  auto* simulate =
      app.add_subcommand("simulate", "Run an instruction-skip campaign");
  simulate->add_option("file", file, "Assembly file")->required();
  simulate->add_option("--config", config_path, "Campaign JSON")->required();
  simulate->add_option("-o,--output", output, "Campaign report (JSON)");
  simulate->add_option("--threads", threads, "Worker threads")
      ->check(CLI::PositiveNumber);
  simulate->add_flag("--json", as_json, "JSON output");

  std::string cycle_model_path;
  HardenOptions report_options;
  auto* report = app.add_subcommand("report", "Hardening overhead estimate");
  report->add_option("file", file, "Assembly file")->required();
  report->add_option("--cycle-model", cycle_model_path, "Cycle weights (JSON)");
  AddHardenOptions(report, report_options);
  report->add_flag("--json", as_json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "skipshield: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (classify->parsed()) return RunClassify(file, as_json, out);
    if (harden->parsed()) {
      return RunHarden(file, output, report_path, harden_options, as_json,
                       out);
    }
    if (verify->parsed()) return RunVerify(verify_options, entry, as_json, out);
    if (simulate->parsed()) {
      return RunSimulate(file, config_path, output, threads, as_json, out);
    }
    if (report->parsed()) {
      return RunReport(file, cycle_model_path, report_options, as_json, out);
    }
  } catch (const Error& e) {
    Diagnose(err, file, e);
    return kExitToolError;
  } catch (const std::exception& e) {
    err << (file.empty() ? "skipshield" : file) << ": error: " << e.what()
        << '\n';
    return kExitToolError;
  }
  return kExitUsage;
}

}  // namespace skipshield
