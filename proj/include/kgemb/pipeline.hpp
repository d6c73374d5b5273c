#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kgemb {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct StageError : std::runtime_error {
  StageError(const std::string& stage_name, const std::string& cause) :
      std::runtime_error("stage " + stage_name + " failed: " + cause), stage(stage_name) {}
  std::string stage;
};

// INI-style: [section] headers, key = value lines, # comments.
class PipelineConfig {
 public:
  static PipelineConfig parse_file(const std::string& path);
  static PipelineConfig parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback = "") const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  double get_real(const std::string& section, const std::string& key, double fallback) const;
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Known stages, in dependency order.
const std::vector<std::string>& pipeline_stage_order();

class PipelineRunner {
 public:
  PipelineRunner(PipelineConfig config, std::ostream& log);

  // Validates up front (ConfigError), then runs stages in dependency order
  // (StageError on failure; that stage's outputs keep a .partial suffix).
  void run(std::vector<std::string> stages);

  const std::string& output_dir() const { return out_dir_; }
  std::vector<std::string> manifest_paths() const;

 private:
  void validate(const std::vector<std::string>& stages) const;
  void run_stage(const std::string& stage);

  void stage_ingest();
  void stage_walk();
  void stage_train_sgns();
  void stage_train_poincare();
  void stage_eval_classify();
  void stage_eval_links();
  void stage_eval_similarity();
  void stage_eval_patient();
  void stage_report();

  std::string path_of(const std::string& name) const;
  void register_artifact(const std::string& stage, const std::string& name);
  std::vector<std::string> embedding_files(const std::string& eval_section) const;
  void write_manifest();

  PipelineConfig config_;
  std::ostream& log_;
  std::string out_dir_;
  std::uint64_t seed_;
  std::size_t workers_;
  struct Artifact { std::string path, stage, sha256; };
  std::vector<Artifact> artifacts_;
  std::vector<std::string> current_stage_files_;
};

}  // namespace kgemb
