#include <chrono>
#include <fstream>
#include <sstream>

#include "eaglass/error.hpp"
#include "eaglass/kernels.hpp"
#include "eaglass/parallel.hpp"
#include "plan.hpp"

namespace eaglass::harness {

namespace {

namespace fs = std::filesystem;

constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kReportFile = "report.json";

// The output location is not part of what a run computes, so it stays out of
// every persisted file; a run directory can be moved or compared anywhere.
json persisted_config(const ExperimentConfig& c) {
  json j = c.to_json();
  j.erase("output");
  return j;
}

json header_json(const ExperimentConfig& c) {
  return {{"type", "header"}, {"schema", kSchemaVersion}, {"version", EAGLASS_VERSION}, {"config", persisted_config(c)}};
}

std::string seed_text(const SeedSpec& s) {
  return "seed {master " + std::to_string(s.master) + ", realization " + std::to_string(s.realization) + ", " +
         std::string(to_string(s.purpose)) + ", substream " + std::to_string(s.substream) + "}";
}

// Rethrows with the task index and its seed, keeping the error category.
json run_task(const detail::Plan& plan, std::size_t i) {
  const auto context = [&](const char* what) {
    return "task " + std::to_string(i) + " (" + seed_text(plan.seed_of(i)) + "): " + what;
  };
  try {
    return plan.task(i);
  } catch (const UnsupportedError& e) {
    throw UnsupportedError(context(e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(context(e.what()));
  } catch (const std::exception& e) {
    throw Error(context(e.what()));
  }
}

json record_json(const ExperimentConfig& c, const detail::Plan& plan, std::size_t i, json payload,
                 std::optional<double> seconds) {
  json r = {{"type", "record"},
            {"experiment", c.id},
            {"index", i},
            {"seed", detail::seed_json(plan.seed_of(i))},
            {"status", "ok"},
            {"payload", std::move(payload)}};
  if (seconds) r["seconds"] = *seconds;
  return r;
}

struct Loaded {
  std::optional<json> header;
  std::vector<json> payloads;
  std::uintmax_t valid_bytes = 0;  // end of the last accepted line
};

// Reads the header and the contiguous prefix of well-formed records.
Loaded load_records(const fs::path& path) {
  Loaded out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  std::uintmax_t pos = 0;
  while (std::getline(in, line)) {
    if (in.eof()) break;  // no trailing newline: partial write
    const std::uintmax_t next = pos + line.size() + 1;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) break;
    if (!out.header) {
      if (j.value("type", "") != "header") break;
      out.header = std::move(j);
    } else {
      if (j.value("type", "") != "record" || j.value("status", "") != "ok" || !j.contains("payload") ||
          !j.contains("index") || !j["index"].is_number_unsigned() ||
          j["index"].get<std::size_t>() != out.payloads.size()) {
        break;
      }
      out.payloads.push_back(std::move(j["payload"]));
    }
    pos = next;
    out.valid_bytes = pos;
  }
  return out;
}

json provenance(const ExperimentConfig& c) {
  return {{"simd", kernels::active().name},
          {"solver", {{"method", c.method}, {"enum_cap", c.enum_cap}, {"transfer_cap", c.transfer_cap}}},
          {"bootstrap_resamples", c.bootstrap},
          {"master_seed", *c.seed}};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

RunOutcome finish(const ExperimentConfig& c, const detail::Plan& plan, const std::vector<json>& payloads,
                  const fs::path& dir) {
  if (payloads.size() < plan.tasks) {
    throw IncompleteRunError("records in " + dir.string() + " hold " + std::to_string(payloads.size()) + " of " +
                             std::to_string(plan.tasks) + " tasks");
  }
  detail::Reduction red = plan.reduce(payloads);
  RunOutcome out;
  out.pass = red.pass;
  out.status = red.status;
  out.dir = dir;
  out.report = {{"id", c.id},
                {"kind", std::string(to_string(c.kind))},
                {"version", EAGLASS_VERSION},
                {"schema", kSchemaVersion},
                {"config", persisted_config(c)},
                {"provenance", provenance(c)},
                {"tasks", plan.tasks},
                {"status", red.status},
                {"pass", red.pass},
                {"result", std::move(red.result)}};
  write_file(dir / kReportFile, out.report.dump(2) + "\n");
  for (const auto& f : red.files) write_file(dir / f.name, f.text);
  return out;
}

}  // namespace

RunOutcome run(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const detail::Plan plan = detail::make_plan(config);
  const fs::path dir(config.output);
  fs::create_directories(dir);
  const fs::path records = dir / kRecordsFile;

  std::vector<json> payloads;
  if (options.resume && fs::exists(records)) {
    Loaded prior = load_records(records);
    if (prior.header) {
      const json expected = header_json(config);
      if (*prior.header != expected) {
        throw ConfigError("records in " + dir.string() +
                          " were written by a different config or version; remove them or drop --resume");
      }
      payloads = std::move(prior.payloads);
      if (payloads.size() > plan.tasks) payloads.resize(plan.tasks);
      fs::resize_file(records, prior.valid_bytes);
    }
  }
  if (payloads.empty()) {
    std::ofstream out(records, std::ios::binary | std::ios::trunc);
    out << header_json(config).dump() << '\n';
    if (!out) throw Error("cannot write " + records.string());
  }

  std::ofstream out(records, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to " + records.string());
  const int workers = resolve_workers(options.workers);
  const std::size_t chunk = static_cast<std::size_t>(workers) * 4;
  struct Done {
    json payload;
    double seconds = 0.0;
  };
  for (std::size_t start = payloads.size(); start < plan.tasks; start += chunk) {
    const std::size_t count = std::min(chunk, plan.tasks - start);
    const auto done = parallel_map<Done>(
        count,
        [&](std::size_t k) {
          const auto t0 = std::chrono::steady_clock::now();
          Done d{run_task(plan, start + k)};
          d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          return d;
        },
        workers);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = start + k;
      out << record_json(config, plan, i, done[k].payload,
                         options.timing ? std::optional<double>(done[k].seconds) : std::nullopt)
                 .dump()
          << '\n';
      payloads.push_back(done[k].payload);
    }
    out.flush();
    if (!out) throw Error("cannot append to " + records.string());
  }
  return finish(config, plan, payloads, dir);
}

RunOutcome report(const fs::path& dir) {
  const fs::path records = dir / kRecordsFile;
  if (!fs::exists(records)) throw IncompleteRunError("no records in " + dir.string());
  Loaded loaded = load_records(records);
  if (!loaded.header) throw IncompleteRunError("records in " + dir.string() + " have no header");
  if (!loaded.header->contains("config")) throw IncompleteRunError("records header carries no config");
  ExperimentConfig config = ExperimentConfig::from_json(loaded.header->at("config"));
  config.output = dir.string();
  config.validate();
  const detail::Plan plan = detail::make_plan(config);
  if (loaded.payloads.size() > plan.tasks) loaded.payloads.resize(plan.tasks);
  return finish(config, plan, loaded.payloads, dir);
}

}  // namespace eaglass::harness
