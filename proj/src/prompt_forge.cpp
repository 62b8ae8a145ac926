#include "kgalign/prompt_forge.hpp"

#include "kgalign/error.hpp"
#include "kgalign/text.hpp"

namespace kgalign {

namespace {

constexpr std::string_view kDefaultLayout =
    "{instruction}\n\nSource entity:\n{source_block}\n\nCandidate entities:\n{options}\n\nAnswer:";

std::string entity_block(PromptKind kind, const KnowledgeGraph& graph, EntityId entity,
                         const SelectionMap* selection) {
  std::string block = graph.label(entity);
  if (kind == PromptKind::KnowledgeDriven) return block;

  if (selection == nullptr) {
    throw Error(ErrorKind::ValueError, "triple selection required for " +
                                           std::string(to_string(kind)) + " prompts");
  }
  const auto it = selection->find(entity);
  if (it == selection->end()) {
    throw Error(ErrorKind::ValueError,
                "no triple selection for entity " + std::to_string(entity));
  }
  const SelectedTriples& sel = it->second;
  if (sel.empty()) {
    block += kind == PromptKind::AttributeAware ? "\n(no attributes available)"
                                                : "\n(no relations available)";
    return block;
  }
  const std::string& name = graph.label(entity);
  for (const auto& st : sel.triples) {
    block += '\n';
    if (sel.kind == TripleKind::Attribute) {
      const auto& t = graph.att_triples()[st.triple_index];
      block += name + " | " + text::label_from_uri(graph.attribute_uri(t.attribute)) + " | " +
               clip_literal(t.value);
    } else {
      const auto& t = graph.rel_triples()[st.triple_index];
      block += name + " | " + text::label_from_uri(graph.relation_uri(t.relation)) + " | " +
               graph.label(t.tail);
    }
  }
  return block;
}

}  // namespace

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::KnowledgeDriven: return "knowledge";
    case PromptKind::AttributeAware: return "attribute";
    case PromptKind::RelationAware: return "relation";
  }
  return "unknown";
}

PromptKind prompt_kind_from_string(std::string_view s) {
  if (s == "knowledge" || s == "KnowledgeDriven") return PromptKind::KnowledgeDriven;
  if (s == "attribute" || s == "AttributeAware") return PromptKind::AttributeAware;
  if (s == "relation" || s == "RelationAware") return PromptKind::RelationAware;
  throw Error(ErrorKind::ConfigError, "unknown prompt kind '" + std::string(s) + "'");
}

PromptTemplate::PromptTemplate() : text_(kDefaultLayout) {}

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  for (const std::string_view key : {"{instruction}", "{source_block}", "{options}"}) {
    if (text_.find(key) == std::string::npos) {
      throw Error(ErrorKind::ConfigError, "prompt template lacks " + std::string(key));
    }
  }
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  return PromptTemplate(read_file(path));
}

std::string PromptTemplate::render(std::string_view instruction, std::string_view source_block,
                                   std::string_view options) const {
  // Single left-to-right scan: placeholder-like text inside substituted
  // entity data is never expanded.
  const std::pair<std::string_view, std::string_view> slots[] = {
      {"{instruction}", instruction}, {"{source_block}", source_block}, {"{options}", options}};
  const std::string_view tpl = text_;
  std::string out;
  out.reserve(tpl.size() + instruction.size() + source_block.size() + options.size());
  for (std::size_t i = 0; i < tpl.size();) {
    bool substituted = false;
    if (tpl[i] == '{') {
      for (const auto& [key, value] : slots) {
        if (tpl.substr(i, key.size()) == key) {
          out += value;
          i += key.size();
          substituted = true;
          break;
        }
      }
    }
    if (!substituted) out += tpl[i++];
  }
  return out;
}

char option_label_for(std::size_t index) {
  if (index >= kMaxOptions) {
    throw Error(ErrorKind::TooManyOptions, "option index " + std::to_string(index));
  }
  return static_cast<char>('A' + index);
}

std::string option_label(std::size_t index) {
  if (index < kMaxOptions) return std::string(1, static_cast<char>('A' + index));
  if (index >= kMaxExtendedOptions) {
    throw Error(ErrorKind::TooManyOptions, "option index " + std::to_string(index));
  }
  const std::size_t rest = index - kMaxOptions;
  return {static_cast<char>('A' + rest / 26), static_cast<char>('A' + rest % 26)};
}

std::optional<std::size_t> option_index_of(std::string_view label) {
  const auto cap = [](char c) { return c >= 'A' && c <= 'Z'; };
  if (label.size() == 1 && cap(label[0])) return static_cast<std::size_t>(label[0] - 'A');
  if (label.size() == 2 && cap(label[0]) && cap(label[1])) {
    return kMaxOptions + static_cast<std::size_t>(label[0] - 'A') * 26 +
           static_cast<std::size_t>(label[1] - 'A');
  }
  return std::nullopt;
}

std::string clip_literal(std::string_view value) {
  return text::utf8_truncate(value, kMaxLiteralChars, kTruncationMarker);
}

Prompt build_prompt(PromptKind kind, EntityId source, std::span<const EntityId> ordered_candidates,
                    const PromptInputs& inputs) {
  if (ordered_candidates.empty()) throw Error(ErrorKind::EmptyCandidates, "no candidates");
  const std::size_t cap = inputs.extended_labels ? kMaxExtendedOptions : kMaxOptions;
  if (ordered_candidates.size() > cap) {
    throw Error(ErrorKind::TooManyOptions, std::to_string(ordered_candidates.size()) +
                                               " candidates exceed " + std::to_string(cap) +
                                               " labels");
  }
  if (inputs.source_graph == nullptr || inputs.target_graph == nullptr) {
    throw Error(ErrorKind::ValueError, "prompt inputs need both graphs");
  }

  Prompt p;
  p.kind = kind;
  p.source = source;
  p.instruction = std::string(inputs.instruction);
  p.source_block = entity_block(kind, *inputs.source_graph, source, inputs.source_selection);

  std::string options;
  for (std::size_t i = 0; i < ordered_candidates.size(); ++i) {
    const EntityId target = ordered_candidates[i];
    PromptOption opt;
    opt.label = option_label(i);
    opt.target = target;
    opt.name = inputs.target_graph->label(target);
    opt.block = entity_block(kind, *inputs.target_graph, target, inputs.target_selection);
    if (i > 0) options += '\n';
    options += opt.label;
    options += ". ";
    options += opt.block;
    p.options.push_back(std::move(opt));
  }

  static const PromptTemplate kDefault;
  const PromptTemplate& layout = inputs.layout ? *inputs.layout : kDefault;
  p.rendered = layout.render(p.instruction, p.source_block, options);
  return p;
}

}  // namespace kgalign
