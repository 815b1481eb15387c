#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "protoagent/protocol/codec.hpp"
#include "protoagent/protocol/simplified_tree.hpp"
#include "protoagent/protocol/validation.hpp"
#include "protoagent/protocol/vocabulary.hpp"
#include "support/generators.hpp"

using namespace protoagent;
using protoagent::testkit::read_fixture;

namespace {

const std::string kMinimal =
    "<ScanProtocol id=\"p\" name=\"Minimal\" schemaVersion=\"1.0\">"
    "<Entity id=\"t\" name=\"Topo\" type=\"TopogramRangeEntity\"/></ScanProtocol>";

std::string thorax() { return read_fixture("protocols/adult_thorax.xml"); }

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
  auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST(ParseProtocol, ThoraxFixtureHasExpectedShape) {
  auto doc = parse_protocol(thorax());
  EXPECT_EQ(doc.root.entity_type, "ScanProtocol");
  EXPECT_EQ(doc.root.id, "thorax-adult");
  EXPECT_GE(entity_count(doc.root) - 1, 6u);
  ASSERT_EQ(doc.root.children.size(), 3u);
  EXPECT_EQ(doc.root.children[0].entity_type, "FrameOfReferenceEntity");
  EXPECT_EQ(doc.root.children[1].entity_type, "TopogramRangeEntity");
  EXPECT_EQ(doc.root.children[2].entity_type, "SpiralRangeEntity");
  const Entity* cad = find_entity(doc, "recon-lungcad");
  ASSERT_NE(cad, nullptr);
  EXPECT_EQ(cad->name, "Inline Result: LungCAD");
  EXPECT_EQ(id_path(doc, "recon-lungcad"), "thorax-adult/spiral-1/recon-cad/recon-lungcad");
}

TEST(ParseProtocol, MinimalDocumentHasTwoEntities) {
  auto doc = parse_protocol(kMinimal);
  EXPECT_EQ(entity_count(doc.root), 2u);
  EXPECT_EQ(doc.root.children.at(0).id, "t");
}

TEST(ParseProtocol, UnclosedTagReportsLine) {
  const std::string text = "<ScanProtocol id=\"p\" name=\"x\" schemaVersion=\"1.0\">\n"
                           "  <Entity id=\"t\" name=\"Topo\" type=\"TopogramRangeEntity\">\n"
                           "</ScanProtocol>\n";
  try {
    parse_protocol(text);
    FAIL() << "expected SyntaxError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SyntaxError);
    ASSERT_TRUE(e.location().has_value());
    EXPECT_EQ(e.location()->line, 3u);
  }
}

TEST(ParseProtocol, TruncatedInputIsSyntaxError) {
  try {
    parse_protocol("<ScanProtocol id=\"p\" name=\"x\" schemaVersion=\"1.0\">\n<Entity");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SyntaxError);
    EXPECT_EQ(e.location()->line, 2u);
  }
}

TEST(ParseProtocol, SchemaErrorsCarryPath) {
  struct Case {
    std::string from, to, code;
  };
  const std::vector<Case> cases = {
      {"id=\"recon-cor-br40\"", "id=\"recon-ax-br40\"", "DUPLICATE_ID"},
      {"<Value type=\"EnumToken\">FaceUpHeadFirst</Value>",
       "<Value i:type=\"EnumToken\">FaceUpHeadFirst</Value>", "UNKNOWN_ATTRIBUTE"},
      {"<Value type=\"Decimal\">512.0</Value>", "<Value type=\"Decimal\">long</Value>", "INVALID_VALUE"},
      {"<Value type=\"Integer\">120</Value>", "<Value type=\"Float\">120</Value>", "UNKNOWN_VALUE_TYPE"},
      {"name=\"Topogram AP\" type=\"TopogramRangeEntity\"", "name=\"Topogram AP\"", "MISSING_ATTRIBUTE"},
      {"<Name>PitchEssential</Name>", "<Label>PitchEssential</Label>", "UNKNOWN_ELEMENT"},
      {"<Name>ScanLengthEssential</Name>", "<Name>PitchEssential</Name>", "DUPLICATE_ESSENTIAL"},
  };
  for (const auto& c : cases) {
    const std::string text = replace_once(thorax(), c.from, c.to);
    try {
      parse_protocol(text);
      ADD_FAILURE() << c.code << " not raised";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::SchemaError) << c.code;
      EXPECT_NE(std::string(e.what()).find(c.code), std::string::npos) << e.what();
      EXPECT_TRUE(e.location().has_value());
    }
    EXPECT_TRUE(validate_syntax(text).has(c.code)) << c.code;
  }
}

TEST(ParseProtocol, RejectsDoctype) {
  EXPECT_THROW(parse_protocol("<!DOCTYPE x [<!ENTITY a \"b\">]>" + kMinimal), Error);
}

TEST(SerializeProtocol, FixtureIsCanonical) {
  const std::string text = thorax();
  EXPECT_EQ(serialize_protocol(parse_protocol(text)), text);
}

TEST(SerializeProtocol, CompositeChildOrderPreserved) {
  auto doc = parse_protocol(thorax());
  const Essential* profile = find_entity(doc, "acq-spiral")->find_essential("PerformedTubeCurrentProfileEssential");
  ASSERT_NE(profile, nullptr);
  ASSERT_EQ(profile->value.composite.size(), 1u);
  const auto& group = profile->value.composite[0];
  ASSERT_EQ(group.children.size(), 2u);
  EXPECT_EQ(group.children[0].name, "Position");
  EXPECT_EQ(group.children[1].name, "Current");

  const std::string out = serialize_protocol(doc);
  EXPECT_LT(out.find("<Position>Top</Position>"), out.find("<Current>80</Current>"));
}

TEST(SerializeProtocol, EscapesSpecialCharacters) {
  ProtocolDocument doc;
  doc.root = {"r", "A \"quoted\" & <angled>\n name", std::string(kRootEntityType), {}, {}};
  doc.root.children.push_back({"c", "x", "CTReconEntity", {{"SeriesDescriptionEssential",
                                                             TypedValue::string(" a<b & c>\r\n ")}}, {}});
  const std::string out = serialize_protocol(doc);
  EXPECT_EQ(parse_protocol(out), doc);
  EXPECT_NE(out.find("&quot;quoted&quot; &amp; &lt;angled&gt;&#10; name"), std::string::npos);
}

TEST(SerializeProtocol, RandomDocumentsRoundTrip) {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 200; ++i) {
    auto doc = testkit::random_document(rng);
    const std::string once = serialize_protocol(doc);
    auto back = parse_protocol(once);
    ASSERT_EQ(back, doc) << once;
    ASSERT_EQ(serialize_protocol(back), once);
    ASSERT_TRUE(validate_syntax(once).ok) << once;
  }
}

TEST(SerializeProtocol, OutputDependsOnlyOnStructure) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 200; ++i) {
    auto doc = testkit::random_document(rng);
    const std::string variant = testkit::noncanonical_xml(doc, rng);
    auto reparsed = parse_protocol(variant);
    ASSERT_EQ(reparsed, doc) << variant;
    ASSERT_EQ(serialize_protocol(reparsed), serialize_protocol(doc));
  }
}

TEST(ValidateSyntax, FixtureIsClean) {
  auto report = validate_syntax(thorax(), {.strict = true});
  EXPECT_TRUE(report.ok);
  EXPECT_TRUE(report.issues.empty());
}

TEST(ValidateSyntax, DuplicateIdReported) {
  auto report = validate_syntax(replace_once(thorax(), "id=\"recon-sag-br40\"", "id=\"recon-ax-br40\""));
  EXPECT_FALSE(report.ok);
  ASSERT_TRUE(report.has("DUPLICATE_ID"));
  EXPECT_EQ(report.issues[0].path, "thorax-adult/spiral-1/recon-body/recon-ax-br40");
}

TEST(ValidateSyntax, UnknownTypeDependsOnStrictness) {
  const std::string text = replace_once(thorax(), "type=\"PostProcessingEntity\"", "type=\"HolographicEntity\"");
  auto strict = validate_syntax(text, {.strict = true});
  EXPECT_FALSE(strict.ok);
  EXPECT_TRUE(strict.has("UNKNOWN_TYPE"));

  auto permissive = validate_syntax(text);
  EXPECT_TRUE(permissive.ok);
  ASSERT_TRUE(permissive.has("UNKNOWN_TYPE"));
  EXPECT_EQ(permissive.issues[0].severity, Severity::Warning);
}

TEST(ValidateSyntax, MalformedTextYieldsSyntaxIssue) {
  auto report = validate_syntax("<ScanProtocol><Entity></ScanProtocol>");
  EXPECT_FALSE(report.ok);
  ASSERT_EQ(report.issues.size(), 1u);
  EXPECT_EQ(report.issues[0].code, "SYNTAX_ERROR");
  EXPECT_TRUE(report.issues[0].location.has_value());
}

TEST(ValidateSyntax, WrongRootRejected) {
  EXPECT_TRUE(validate_syntax("<Protocol id=\"a\" name=\"b\" schemaVersion=\"1.0\"/>").has("BAD_ROOT"));
  EXPECT_TRUE(validate_syntax("<ScanProtocol id=\"a\" name=\"b\" schemaVersion=\"2.0\"/>").has("UNSUPPORTED_VERSION"));
}

TEST(ValidateStructure, FixtureSatisfiesShippedRules) {
  auto report = validate_structure(parse_protocol(thorax()), RuleSet::builtin());
  EXPECT_TRUE(report.ok);
  EXPECT_TRUE(report.issues.empty());
}

TEST(ValidateStructure, EmptyCompoundFlagged) {
  auto doc = parse_protocol(thorax());
  auto loc = locate(doc, "recon-cad");
  entity_at(doc.root, loc->path).children.clear();
  auto report = validate_structure(doc, RuleSet::builtin());
  EXPECT_FALSE(report.ok);
  ASSERT_TRUE(report.has("EMPTY_COMPOUND"));
  EXPECT_EQ(report.issues[0].path, "thorax-adult/spiral-1/recon-cad");
}

TEST(ValidateStructure, DisallowedEnumValue) {
  auto doc = parse_protocol(replace_once(thorax(), "FaceUpHeadFirst", "UpsideDown"));
  auto report = validate_structure(doc, RuleSet::builtin());
  EXPECT_FALSE(report.ok);
  EXPECT_TRUE(report.has("VALUE_NOT_ALLOWED"));
}

TEST(ValidateStructure, NumericRangeAndDependency) {
  auto doc = parse_protocol(thorax());
  auto loc = locate(doc, "recon-ax-bl60");
  entity_at(doc.root, loc->path).find_essential("SliceThicknessEssential")->value.scalar = "5.0";
  auto report = validate_structure(doc, RuleSet::builtin());
  EXPECT_TRUE(report.has("DEPENDENCY_VIOLATION"));
  EXPECT_FALSE(report.has("VALUE_NOT_ALLOWED"));

  entity_at(doc.root, loc->path).find_essential("SliceThicknessEssential")->value.scalar = "12.0";
  EXPECT_TRUE(validate_structure(doc, RuleSet::builtin()).has("VALUE_NOT_ALLOWED"));
}

TEST(ValidateStructure, PlacementChecked) {
  auto doc = parse_protocol(thorax());
  Entity stray{"stray", "Stray recon", "CTReconEntity", {}, {}};
  doc.root.children.push_back(stray);
  auto report = validate_structure(doc, RuleSet::builtin());
  EXPECT_TRUE(report.has("PLACEMENT_NOT_ALLOWED"));
}

TEST(RuleSet, RejectsMalformedFiles) {
  const std::vector<std::pair<std::string, std::string>> bad = {
      {"[1,2]", ""},
      {R"({"allowed_values": {"K": []}})", "/allowed_values/K"},
      {R"({"allowed_values": {"K": {"min": 3, "max": 1}}})", "/allowed_values/K"},
      {R"({"dependencies": [{"when": {}}]})", "/dependencies/0"},
      {R"({"colour": 1})", "/colour"},
      {"{not json", ""},
  };
  for (const auto& [text, pointer] : bad) {
    try {
      RuleSet::from_json(text);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::RuleSetError);
      EXPECT_EQ(e.where(), pointer) << text;
    }
  }
}

TEST(RuleSet, ShippedRulesLoad) {
  const auto& rules = RuleSet::builtin();
  EXPECT_TRUE(rules.is_compound("StandardReconCompoundEntity"));
  EXPECT_FALSE(rules.is_compound("CTReconEntity"));
  EXPECT_TRUE(rules.placement_allowed("StandardReconCompoundEntity", "CTReconEntity"));
  EXPECT_FALSE(rules.placement_allowed("ScanProtocol", "CTReconEntity"));
  EXPECT_TRUE(rules.value_problem("TableDirectionPatientRelatedEssential", TypedValue::token("Lateral")));
}

TEST(SimplifiedTree, MinimalDocumentIndentsChild) {
  auto tree = render_simplified_tree(parse_protocol(kMinimal));
  ASSERT_EQ(tree.lines.size(), 2u);
  EXPECT_EQ(tree.lines[0], "ScanProtocol | Minimal | p");
  EXPECT_EQ(tree.lines[1], "  TopogramRangeEntity | Topo | t");
}

TEST(SimplifiedTree, LineCountMatchesEntityTags) {
  const std::string text = thorax();
  // Independent count straight from the XML text.
  std::regex tag("<(Entity|ScanProtocol)[ >/]");
  auto count = std::distance(std::sregex_iterator(text.begin(), text.end(), tag), std::sregex_iterator());
  auto tree = render_simplified_tree(parse_protocol(text));
  EXPECT_EQ(tree.lines.size(), static_cast<std::size_t>(count));
  EXPECT_EQ(render_simplified_tree(parse_protocol(text)), tree);
}

TEST(SimplifiedTree, LineCountEqualsEntityCountOnRandomTrees) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto doc = testkit::random_document(rng);
    std::size_t counted = 0;
    std::vector<const Entity*> stack{&doc.root};
    while (!stack.empty()) {
      const Entity* e = stack.back();
      stack.pop_back();
      ++counted;
      for (const auto& c : e->children) stack.push_back(&c);
    }
    EXPECT_EQ(render_simplified_tree(doc).lines.size(), counted);
  }
}

TEST(Vocabulary, BuiltinRegistersCoreTypes) {
  const auto& v = Vocabulary::builtin();
  for (const char* t : {"TopogramRangeEntity", "SpiralRangeEntity", "CTReconEntity",
                        "StandardReconCompoundEntity", "AcquisitionUnitEntity", "FrameOfReferenceEntity",
                        "PostProcessingEntity"}) {
    EXPECT_TRUE(v.has_type(t)) << t;
  }
  EXPECT_EQ(v.essential_type("FrameOfReferenceEntity", "PatientPositionEssential"), ValueType::EnumToken);
  EXPECT_FALSE(v.essential_type("FrameOfReferenceEntity", "KernelEssential").has_value());
}
