#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgemb {

enum class SemanticGroup { ANAT, CHEM, DISO, PROC };

std::string to_string(SemanticGroup g);
std::optional<SemanticGroup> semantic_group_from_string(std::string_view s);

struct ConceptRecord {
  std::string cui;
  std::string source_code;
  std::string preferred_name;
  std::string language;
};

struct SemanticTypeRecord {
  std::string cui;
  std::string semantic_type;
  SemanticGroup semantic_group;
};

struct RelationRecord {
  std::string cui_head;
  std::string cui_tail;
  std::string relation_type;
  bool is_hierarchical = false;  // true iff relation_type == "isa" (case-insensitive)
};

struct SkipReport {
  std::size_t dropped_concepts = 0;
  std::size_t dropped_relations = 0;
  std::size_t duplicate_relations = 0;
};

struct MalformedLine : std::runtime_error {
  explicit MalformedLine(std::size_t line) :
      std::runtime_error("malformed RRF line " + std::to_string(line)), line_no(line) {}
  std::size_t line_no;
};

struct EncodingError : std::runtime_error {
  explicit EncodingError(std::size_t line) :
      std::runtime_error("invalid UTF-8 on line " + std::to_string(line)), line_no(line) {}
  std::size_t line_no;
};

using RrfRow = std::vector<std::string>;

// Pipe-delimited with trailing pipe, no header. Throws MalformedLine / EncodingError.
std::vector<RrfRow> parse_rrf_lines(std::string_view raw_text, std::size_t column_count);

std::string serialize_rrf_rows(const std::vector<RrfRow>& rows);

// Fixed semantic_type -> semantic_group lookup, shipped as a TSV data file.
class SemanticGroupTable {
 public:
  static SemanticGroupTable from_tsv(const std::string& path);
  static SemanticGroupTable builtin();

  std::optional<SemanticGroup> lookup(const std::string& semantic_type) const;
  std::size_t size() const { return map_.size(); }

 private:
  std::unordered_map<std::string, SemanticGroup> map_;
};

struct ConceptSet {
  std::vector<ConceptRecord> concepts;       // one per retained CUI, input order
  std::vector<SemanticTypeRecord> types;     // parallel to concepts
  SkipReport skips;
};

// MRCONSO: 18 columns (CUI=0, LAT=1, SCUI=9, CODE=13, STR=14).
// MRSTY:   6 columns (CUI=0, STY=3).
ConceptSet load_concepts(const std::vector<RrfRow>& mrconso_rows,
                         const std::vector<RrfRow>& mrsty_rows,
                         const SemanticGroupTable& groups,
                         const std::set<SemanticGroup>& allowed_groups);

// MRREL: 16 columns (CUI1=0, REL=3, RELA=4, CUI2=5). Keeps relations with both
// endpoints retained, drops self-loops and exact duplicate triples.
std::vector<RelationRecord> load_relations(const std::vector<RrfRow>& mrrel_rows,
                                           const std::set<std::string>& retained_cuis,
                                           SkipReport& skips);

inline constexpr std::size_t kMrconsoColumns = 18;
inline constexpr std::size_t kMrrelColumns = 16;
inline constexpr std::size_t kMrstyColumns = 6;

}  // namespace kgemb
