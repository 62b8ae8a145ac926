#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgalign/kg_store.hpp"
#include "kgalign/triple_selector.hpp"

namespace kgalign {

enum class PromptKind { KnowledgeDriven, AttributeAware, RelationAware };

std::string_view to_string(PromptKind kind);
/// Accepts "knowledge", "attribute", "relation" (and the enum spellings).
PromptKind prompt_kind_from_string(std::string_view s);

inline constexpr std::string_view kDefaultInstruction =
    "You are given a source entity and a list of candidate entities. Select the candidate that "
    "refers to the same real-world entity as the source. Answer with the option letter only.";

inline constexpr std::size_t kMaxLiteralChars = 120;
inline constexpr std::string_view kTruncationMarker = "...";
inline constexpr std::size_t kMaxOptions = 26;
/// Cap with two-letter labels (A..Z, AA..ZZ).
inline constexpr std::size_t kMaxExtendedOptions = 26 + 26 * 26;

struct PromptOption {
  std::string label = "A";
  EntityId target = 0;
  std::string name;
  std::string block;
};

struct Prompt {
  PromptKind kind = PromptKind::KnowledgeDriven;
  EntityId source = 0;
  std::string instruction;
  std::string source_block;
  std::vector<PromptOption> options;
  std::string rendered;
};

/// Text layout with {instruction}, {source_block} and {options} placeholders.
class PromptTemplate {
 public:
  PromptTemplate();
  explicit PromptTemplate(std::string text);
  static PromptTemplate load(const std::filesystem::path& path);

  const std::string& text() const noexcept { return text_; }
  std::string render(std::string_view instruction, std::string_view source_block,
                     std::string_view options) const;

 private:
  std::string text_;
};

/// 0 -> 'A' ... 25 -> 'Z'. Throws TooManyOptions.
char option_label_for(std::size_t index);
/// Column-style label: 0 -> "A", 25 -> "Z", 26 -> "AA", 27 -> "AB" ...
/// Matches option_label_for below 26. Throws TooManyOptions past "ZZ".
std::string option_label(std::size_t index);
/// Inverse of option_label; nullopt for anything but 1-2 capital letters.
std::optional<std::size_t> option_index_of(std::string_view label);

/// Selected triples per entity for one side, keyed by entity id.
using SelectionMap = std::map<EntityId, SelectedTriples>;

struct PromptInputs {
  const KnowledgeGraph* source_graph = nullptr;
  const KnowledgeGraph* target_graph = nullptr;
  /// Required for AttributeAware / RelationAware (entries may be empty).
  const SelectionMap* source_selection = nullptr;
  const SelectionMap* target_selection = nullptr;
  const PromptTemplate* layout = nullptr;  // default layout when null
  std::string_view instruction = kDefaultInstruction;
  /// Allows more than 26 options, labelled AA, AB, ... after Z.
  bool extended_labels = false;
};

/// Renders one multiple-choice question. Options follow `ordered_candidates`
/// exactly; triple lines follow selection order. Throws EmptyCandidates,
/// TooManyOptions, and ValueError when a needed selection is missing.
Prompt build_prompt(PromptKind kind, EntityId source, std::span<const EntityId> ordered_candidates,
                    const PromptInputs& inputs);

/// Literal after the single truncation rule applied to prompt text.
std::string clip_literal(std::string_view value);

}  // namespace kgalign
