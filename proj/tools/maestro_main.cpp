#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>

#include "CLI11.hpp"
#include "maestro/orchestrator.hpp"

namespace {

using namespace maestro;

int run_command(const std::string& topology, const std::string& panel,
                const std::string& mapping, const std::string& script,
                const std::string& llm_endpoint, const std::string& model,
                const std::string& request, const std::string& out_path, int max_turns,
                int retry_budget) {
  std::unique_ptr<llm::Backend> backend;
  std::unique_ptr<Orchestrator> orchestrator;
  try {
    if (!script.empty()) {
      backend = std::make_unique<llm::ScriptedBackend>(llm::load_script_file(script));
    } else {
      llm::HttpConfig http;
      http.endpoint = llm_endpoint;
      http.model = model;
      if (const char* key = std::getenv("LLM_API_KEY")) http.api_key = key;
      backend = std::make_unique<llm::HttpBackend>(http);
    }

    OrchestratorConfig config;
    config.topology_path = topology;
    config.panel_path = panel;
    config.mapping_path = mapping;
    config.max_turns = max_turns;
    config.retry_budget = retry_budget;

    std::mutex print_mutex;
    config.on_message = [&print_mutex](const agents::Message& m) {
      std::lock_guard lock(print_mutex);
      std::cout << "[" << m.group_id << "] #" << m.turn_index << " "
                << agents::to_label(m.sender) << ": " << m.content << "\n";
    };

    orchestrator = std::make_unique<Orchestrator>(config, *backend);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunReport report = orchestrator->run(request);

    if (!out_path.empty()) {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) {
        std::cerr << "config error: cannot write '" << out_path << "'\n";
        return 2;
      }
      out << render_transcript_jsonl(report.messages);
    }

    for (const auto& m : report.messages) {
      if (m.is_terminal && m.terminal_reason == "completed") {
        std::cout << "[" << m.group_id << "] final: " << m.content << "\n";
      }
    }
    std::cout << (report.ok ? "run complete" : "run failed") << " (topology version "
              << report.topology_version << ")\n";
    return report.exit_code();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.kind() == "EmptyRequest" || e.kind() == "ConfigError") return 2;
    return 5;
  }
}

int replay_command(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "config error: cannot open '" << path << "'\n";
    return 2;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    auto messages = parse_transcript_jsonl(buf.str());
    std::cout << render_transcript_pretty(messages);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-domain network orchestration with chat-group agents"};
  app.require_subcommand(1);

  std::string topology, panel, mapping, script, llm_endpoint, model, request, out_path;
  int max_turns = 40;
  int retry_budget = 2;

  CLI::App* run = app.add_subcommand("run", "Run the two-group orchestration for a request");
  run->add_option("--topology", topology, "Topology JSON file")->required();
  run->add_option("--panel", panel, "Port panel JSON file")->required();
  run->add_option("--mapping", mapping, "Port-to-topology mapping JSON file")->required();
  auto* script_opt = run->add_option("--script", script, "Scripted-backend JSON file");
  auto* endpoint_opt =
      run->add_option("--llm-endpoint", llm_endpoint, "Chat-completions endpoint URL");
  run->add_option("--model", model, "Model name for the HTTP backend");
  run->add_option("--request", request, "Admin task request")->required();
  run->add_option("--out", out_path, "Transcript output path (JSON lines)");
  run->add_option("--max-turns", max_turns, "Per-chat turn budget");
  run->add_option("--retry-budget", retry_budget, "Repair attempts per plan step");
  script_opt->excludes(endpoint_opt);
  endpoint_opt->excludes(script_opt);

  std::string replay_path;
  CLI::App* replay = app.add_subcommand("replay", "Render a stored transcript");
  replay->add_option("transcript", replay_path, "Transcript JSON-lines file")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (script.empty() && llm_endpoint.empty()) {
      std::cerr << "config error: provide --script or --llm-endpoint\n";
      return 2;
    }
    if (!llm_endpoint.empty() && model.empty()) {
      std::cerr << "config error: --llm-endpoint requires --model\n";
      return 2;
    }
    return run_command(topology, panel, mapping, script, llm_endpoint, model, request,
                       out_path, max_turns, retry_budget);
  }
  return replay_command(replay_path);
}
