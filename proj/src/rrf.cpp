#include "kgemb/rrf.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "kgemb/util.hpp"

namespace kgemb {

std::string to_string(SemanticGroup g) {
  switch (g) {
    case SemanticGroup::ANAT: return "ANAT";
    case SemanticGroup::CHEM: return "CHEM";
    case SemanticGroup::DISO: return "DISO";
    case SemanticGroup::PROC: return "PROC";
  }
  return "?";
}

std::optional<SemanticGroup> semantic_group_from_string(std::string_view s) {
  if (s == "ANAT") return SemanticGroup::ANAT;
  if (s == "CHEM") return SemanticGroup::CHEM;
  if (s == "DISO") return SemanticGroup::DISO;
  if (s == "PROC") return SemanticGroup::PROC;
  return std::nullopt;
}

namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    std::size_t n;
    if (c < 0x80) n = 0;
    else if ((c & 0xe0) == 0xc0) n = 1;
    else if ((c & 0xf0) == 0xe0) n = 2;
    else if ((c & 0xf8) == 0xf0) n = 3;
    else return false;
    if (i + n >= s.size()) return false;
    for (std::size_t j = 1; j <= n; ++j)
      if ((static_cast<unsigned char>(s[i + j]) & 0xc0) != 0x80) return false;
    i += n + 1;
  }
  return true;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::vector<RrfRow> parse_rrf_lines(std::string_view raw_text, std::size_t column_count) {
  std::vector<RrfRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= raw_text.size()) {
    std::size_t eol = raw_text.find('\n', pos);
    std::string_view line = raw_text.substr(pos, eol == std::string_view::npos
                                                     ? raw_text.size() - pos
                                                     : eol - pos);
    pos = (eol == std::string_view::npos) ? raw_text.size() + 1 : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!valid_utf8(line)) throw EncodingError(line_no);

    RrfRow row;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == '|') {
        row.emplace_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    // trailing pipe yields one empty field past the last column
    if (row.size() != column_count + 1 || !row.back().empty()) throw MalformedLine(line_no);
    row.pop_back();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string serialize_rrf_rows(const std::vector<RrfRow>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (const auto& f : row) {
      out += f;
      out += '|';
    }
    out += '\n';
  }
  return out;
}

SemanticGroupTable SemanticGroupTable::from_tsv(const std::string& path) {
  SemanticGroupTable t;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open semantic group table: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() < 2) continue;
    auto g = semantic_group_from_string(fields[1]);
    if (g) t.map_.emplace(fields[0], *g);
  }
  return t;
}

SemanticGroupTable SemanticGroupTable::builtin() {
  // Mirrors the shipped data/semantic_groups.tsv for the four groups of interest.
  static const std::pair<const char*, SemanticGroup> entries[] = {
      {"Anatomical Structure", SemanticGroup::ANAT},
      {"Body Location or Region", SemanticGroup::ANAT},
      {"Body Part, Organ, or Organ Component", SemanticGroup::ANAT},
      {"Body Space or Junction", SemanticGroup::ANAT},
      {"Body Substance", SemanticGroup::ANAT},
      {"Body System", SemanticGroup::ANAT},
      {"Cell", SemanticGroup::ANAT},
      {"Cell Component", SemanticGroup::ANAT},
      {"Embryonic Structure", SemanticGroup::ANAT},
      {"Fully Formed Anatomical Structure", SemanticGroup::ANAT},
      {"Tissue", SemanticGroup::ANAT},
      {"Amino Acid, Peptide, or Protein", SemanticGroup::CHEM},
      {"Antibiotic", SemanticGroup::CHEM},
      {"Biologically Active Substance", SemanticGroup::CHEM},
      {"Biomedical or Dental Material", SemanticGroup::CHEM},
      {"Chemical", SemanticGroup::CHEM},
      {"Chemical Viewed Functionally", SemanticGroup::CHEM},
      {"Chemical Viewed Structurally", SemanticGroup::CHEM},
      {"Clinical Drug", SemanticGroup::CHEM},
      {"Element, Ion, or Isotope", SemanticGroup::CHEM},
      {"Enzyme", SemanticGroup::CHEM},
      {"Hazardous or Poisonous Substance", SemanticGroup::CHEM},
      {"Hormone", SemanticGroup::CHEM},
      {"Immunologic Factor", SemanticGroup::CHEM},
      {"Indicator, Reagent, or Diagnostic Aid", SemanticGroup::CHEM},
      {"Inorganic Chemical", SemanticGroup::CHEM},
      {"Nucleic Acid, Nucleoside, or Nucleotide", SemanticGroup::CHEM},
      {"Organic Chemical", SemanticGroup::CHEM},
      {"Pharmacologic Substance", SemanticGroup::CHEM},
      {"Receptor", SemanticGroup::CHEM},
      {"Vitamin", SemanticGroup::CHEM},
      {"Acquired Abnormality", SemanticGroup::DISO},
      {"Anatomical Abnormality", SemanticGroup::DISO},
      {"Cell or Molecular Dysfunction", SemanticGroup::DISO},
      {"Congenital Abnormality", SemanticGroup::DISO},
      {"Disease or Syndrome", SemanticGroup::DISO},
      {"Experimental Model of Disease", SemanticGroup::DISO},
      {"Finding", SemanticGroup::DISO},
      {"Injury or Poisoning", SemanticGroup::DISO},
      {"Mental or Behavioral Dysfunction", SemanticGroup::DISO},
      {"Neoplastic Process", SemanticGroup::DISO},
      {"Pathologic Function", SemanticGroup::DISO},
      {"Sign or Symptom", SemanticGroup::DISO},
      {"Diagnostic Procedure", SemanticGroup::PROC},
      {"Educational Activity", SemanticGroup::PROC},
      {"Health Care Activity", SemanticGroup::PROC},
      {"Laboratory Procedure", SemanticGroup::PROC},
      {"Molecular Biology Research Technique", SemanticGroup::PROC},
      {"Research Activity", SemanticGroup::PROC},
      {"Therapeutic or Preventive Procedure", SemanticGroup::PROC},
  };
  SemanticGroupTable t;
  for (const auto& [name, g] : entries) t.map_.emplace(name, g);
  return t;
}

std::optional<SemanticGroup> SemanticGroupTable::lookup(const std::string& semantic_type) const {
  auto it = map_.find(semantic_type);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

ConceptSet load_concepts(const std::vector<RrfRow>& mrconso_rows,
                         const std::vector<RrfRow>& mrsty_rows,
                         const SemanticGroupTable& groups,
                         const std::set<SemanticGroup>& allowed_groups) {
  ConceptSet out;

  // First retained semantic type per CUI.
  std::unordered_map<std::string, std::pair<std::string, SemanticGroup>> cui_type;
  for (const auto& row : mrsty_rows) {
    const std::string& cui = row[0];
    const std::string& sty = row[3];
    if (cui_type.count(cui)) continue;
    auto g = groups.lookup(sty);
    if (!g || !allowed_groups.count(*g)) continue;
    cui_type.emplace(cui, std::make_pair(sty, *g));
  }

  std::unordered_map<std::string, std::size_t> cui_index;  // into out.concepts
  std::set<std::string> dropped;
  for (const auto& row : mrconso_rows) {
    const std::string& cui = row[0];
    const std::string& lang = row[1];
    auto tit = cui_type.find(cui);
    if (tit == cui_type.end()) {
      dropped.insert(cui);
      continue;
    }
    auto it = cui_index.find(cui);
    if (it == cui_index.end()) {
      ConceptRecord rec;
      rec.cui = cui;
      rec.source_code = row[9].empty() ? row[13] : row[9];
      rec.preferred_name = row[14];
      rec.language = lang;
      cui_index.emplace(cui, out.concepts.size());
      out.concepts.push_back(std::move(rec));
      out.types.push_back({cui, tit->second.first, tit->second.second});
    } else {
      // first English row wins over an earlier non-English one
      ConceptRecord& rec = out.concepts[it->second];
      if (rec.language != "ENG" && lang == "ENG") {
        rec.source_code = row[9].empty() ? row[13] : row[9];
        rec.preferred_name = row[14];
        rec.language = lang;
      }
    }
  }
  out.skips.dropped_concepts = dropped.size();
  return out;
}

std::vector<RelationRecord> load_relations(const std::vector<RrfRow>& mrrel_rows,
                                           const std::set<std::string>& retained_cuis,
                                           SkipReport& skips) {
  std::vector<RelationRecord> out;
  std::set<std::string> seen;
  for (const auto& row : mrrel_rows) {
    const std::string& head = row[0];
    const std::string& tail = row[5];
    std::string rel = row[4].empty() ? row[3] : row[4];  // RELA preferred over REL
    if (!retained_cuis.count(head) || !retained_cuis.count(tail)) {
      ++skips.dropped_relations;
      continue;
    }
    if (head == tail) {
      ++skips.dropped_relations;
      continue;
    }
    std::string key = head + "|" + tail + "|" + rel;
    if (!seen.insert(key).second) {
      ++skips.duplicate_relations;
      continue;
    }
    RelationRecord rec;
    rec.cui_head = head;
    rec.cui_tail = tail;
    rec.is_hierarchical = (lower(rel) == "isa");
    rec.relation_type = std::move(rel);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace kgemb
