#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evichain/gas.hpp"
#include "evichain/scenario.hpp"

namespace {

using namespace evichain;

nlohmann::json load_scenario_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open scenario file: " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad scenario json in " + path + ": " + e.what());
  }
  return j;
}

std::vector<std::filesystem::path> scenario_files(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ConfigError("no scenario files in " + dir);
  }
  return files;
}

void print_result(const ScenarioResult& res, bool quiet) {
  if (!quiet) {
    for (const auto& [label, verdict] : res.verdicts) {
      std::cout << "  verdict " << label << ": " << to_string(verdict.outcome);
      if (!verdict.findings.empty()) {
        std::cout << " [";
        for (std::size_t i = 0; i < verdict.findings.size(); ++i) {
          std::cout << (i ? " " : "") << to_string(verdict.findings[i]);
        }
        std::cout << "]";
      }
      std::cout << "\n";
    }
    for (const auto& [label, check] : res.elapsed) {
      std::cout << "  elapsed " << label << ": "
                << (check == TimeCheck::upheld     ? "upheld"
                    : check == TimeCheck::refuted  ? "refuted"
                                                   : "unproven")
                << "\n";
    }
    for (const auto& [label, check] : res.alibi) {
      std::cout << "  alibi " << label << ": "
                << (check == AlibiCheck::consistent ? "consistent"
                    : check == AlibiCheck::fabrication_detected
                        ? "fabrication_detected"
                        : "unproven")
                << "\n";
    }
    for (const auto& [label, verdicts] : res.audits) {
      std::cout << "  audit " << label << ":";
      for (const NodeVerdict& nv : verdicts) {
        std::cout << " node" << nv.node_id << "=" << to_string(nv.verdict.outcome);
      }
      std::cout << "\n";
    }
    for (const auto& [label, anchor] : res.anchors) {
      std::cout << "  anchor " << label << ": " << (anchor.first ? "ok" : "broken")
                << " missing=" << anchor.second << "\n";
    }
    std::cout << "  invariants: confidentiality=" << (res.invariants.confidentiality ? "yes" : "NO")
              << " atomicity=" << (res.invariants.atomicity ? "yes" : "NO")
              << " monotone_clock=" << (res.invariants.monotone_clock ? "yes" : "NO") << "\n";
    if (!res.divergent_nodes.empty()) {
      std::cout << "  divergent nodes:";
      for (const int id : res.divergent_nodes) {
        std::cout << " " << id;
      }
      std::cout << "\n";
    }
    std::cout << "  chain work: " << res.chain_work;
    if (res.anchor_gas > 0) {
      std::cout << ", anchor gas: " << res.anchor_gas;
    }
    std::cout << ", transcript: " << res.transcript.lines().size() << " lines, digest "
              << res.transcript.digest().hex().substr(0, 16) << "\n";
  }
  for (const std::string& f : res.failures) {
    std::cout << "  failed: " << f << "\n";
  }
  std::cout << (res.passed ? "PASS" : "FAIL") << " " << res.name << " (seed " << res.seed << ")\n";
}

int cmd_run(const std::string& file, std::optional<std::uint64_t> seed,
            std::optional<std::size_t> nodes, std::optional<double> drop_rate,
            const std::string& out, bool quiet) {
  nlohmann::json j = load_scenario_json(file);
  if (nodes) {
    j["nodes"] = *nodes;
  }
  if (drop_rate) {
    j["drop_rate"] = *drop_rate;
  }
  const Scenario scenario = Scenario::from_json(j);
  Runner runner(scenario);
  const ScenarioResult res = runner.run(seed);
  print_result(res, quiet);
  if (!out.empty()) {
    std::ofstream o(out);
    if (!o) {
      throw ConfigError("cannot write transcript to " + out);
    }
    o << res.transcript.text();
    std::cout << "transcript written to " << out << "\n";
  }
  return res.passed ? 0 : 1;
}

int cmd_props(const std::string& dir, std::uint64_t seeds) {
  bool all_ok = true;
  for (const auto& path : scenario_files(dir)) {
    const Scenario scenario = Scenario::load_file(path);
    Runner runner(scenario);
    std::uint64_t passed = 0;
    bool deterministic = true;
    for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
      const ScenarioResult first = runner.run(seed);
      if (first.passed) {
        ++passed;
      }
      if (seed == 1 && runner.run(seed).transcript.digest() != first.transcript.digest()) {
        deterministic = false;
      }
    }
    const bool ok = passed == seeds && deterministic;
    all_ok = all_ok && ok;
    std::cout << (ok ? "PASS" : "FAIL") << " " << std::left << std::setw(24) << scenario.name
              << " " << passed << "/" << seeds << " seeds"
              << (deterministic ? "" : " (nondeterministic)") << "\n";
  }
  return all_ok ? 0 : 1;
}

int cmd_gas(std::optional<std::string> policy, double gwei, double writes_per_day, double eth_usd,
            std::uint64_t gas_per_store, bool table) {
  if (policy) {
    if (*policy == "fastest") {
      gwei = kFastestPolicy.gas_price_gwei;
    } else if (*policy == "average") {
      gwei = kAveragePolicy.gas_price_gwei;
    } else if (*policy == "cheap") {
      gwei = kCheapPolicy.gas_price_gwei;
    } else {
      throw ConfigError("unknown policy: " + *policy + " (fastest, average, cheap)");
    }
  }
  const auto line = [&](const GasEstimate& e) {
    std::cout << std::fixed << std::setprecision(1) << std::setw(7) << e.gas_price_gwei
              << " gwei  " << std::setprecision(6) << e.eth_per_write << " eth/write  "
              << std::setprecision(2) << std::setw(10) << e.usd_per_year << " usd/yr";
    if (e.confirm) {
      std::cout << "  confirm " << std::setprecision(0) << e.confirm->lo_s << "-"
                << e.confirm->hi_s << "s";
    }
    std::cout << "\n";
  };
  if (table) {
    std::cout << "store gas " << gas_per_store << ", " << writes_per_day << " writes/day, eth "
              << std::fixed << std::setprecision(3) << eth_usd << " usd\n";
    for (const PricePolicy& p : {kFastestPolicy, kAveragePolicy, kCheapPolicy}) {
      std::cout << std::left << std::setw(8) << p.name << std::right;
      line(estimate_annual_cost(p.gas_price_gwei, writes_per_day, eth_usd, gas_per_store));
    }
    return 0;
  }
  line(estimate_annual_cost(gwei, writes_per_day, eth_usd, gas_per_store));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic evidence-chain simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute one scenario file and check its expectations");
  std::string run_file;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_nodes;
  std::optional<double> run_drop;
  std::string run_out;
  bool run_quiet = false;
  run->add_option("file", run_file, "scenario json file")->required();
  run->add_option("--seed", run_seed, "override the scenario seed");
  run->add_option("--nodes", run_nodes, "override the chain node count");
  run->add_option("--drop-rate", run_drop, "override the message drop rate [0, 0.95]");
  run->add_option("--out", run_out, "write the run transcript to this file");
  run->add_flag("--quiet", run_quiet, "print only failures and the final line");

  auto* props = app.add_subcommand("props", "run every scenario in a directory across many seeds");
  std::string props_dir = "scenarios";
  std::uint64_t props_seeds = 5;
  props->add_option("--scenario-dir", props_dir, "directory with scenario json files");
  props->add_option("--seeds", props_seeds, "number of seeds per scenario")
      ->check(CLI::PositiveNumber);

  auto* gas = app.add_subcommand("gas", "estimate annual anchoring cost");
  std::optional<std::string> gas_policy;
  double gas_gwei = kFastestPolicy.gas_price_gwei;
  double gas_writes = kDefaultWritesPerDay;
  double gas_eth = kDefaultEthUsd;
  std::uint64_t gas_store = AnchorContract::kStoreGas;
  bool gas_table = false;
  gas->add_option("--policy", gas_policy, "price tier: fastest, average, cheap");
  gas->add_option("--gas-price", gas_gwei, "gas price in gwei");
  gas->add_option("--writes-per-day", gas_writes, "anchor writes per day");
  gas->add_option("--eth-usd", gas_eth, "exchange rate");
  gas->add_option("--gas-per-store", gas_store, "gas burned per stored root");
  gas->add_flag("--table", gas_table, "print all three price tiers");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(run_file, run_seed, run_nodes, run_drop, run_out, run_quiet);
    }
    if (props->parsed()) {
      return cmd_props(props_dir, props_seeds);
    }
    return cmd_gas(gas_policy, gas_gwei, gas_writes, gas_eth, gas_store, gas_table);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
}
