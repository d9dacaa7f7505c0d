#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace probe::corpus {

enum class CorpusErrc {
    unsatisfiable_uniqueness,
    pool_exhausted,
    unknown_token,
    no_divergence,
    no_clean_donor,
    donor_coverage_infeasible,
    vocab_overflow,
    bad_precondition,
    io_error,
};

struct CorpusError : std::runtime_error {
    CorpusErrc code;
    CorpusError(CorpusErrc c, const std::string& what) : std::runtime_error(what), code(c) {}
};

// ---------------------------------------------------------------------------
// entity pools
// ---------------------------------------------------------------------------

struct PoolCounts {
    int birth_places = 50;
    int universities = 25;
    int companies = 32;
    int names = 512;
};

struct PoolOptions {
    int min_word_len = 4;
    int max_word_len = 8;
    int retry_budget = 200;  // attempts per word before giving up
};

// Synthetic entity pools. Universities carry the literal "University of "
// prefix, companies a type postfix, birth places the "city, country" shape.
// The distinctive leading word of every entity is globally unique, so each
// entity occupies exactly one dedicated token.
struct EntityPools {
    std::vector<std::string> birth_places;
    std::vector<std::string> universities;
    std::vector<std::string> companies;
    std::vector<std::string> majors;
    std::vector<std::string> work_places;
    std::vector<std::string> names;

    std::vector<int> major_field;          // field id per major
    std::vector<int> company_field;        // field id per company
    std::vector<int> company_work_place;   // work_places index bound to each company
    int n_fields = 0;

    // the word whose token realizes the entity in text (skips the
    // "University of" prefix for universities)
    static std::string lead_word(std::string_view entity);
};

EntityPools build_entity_pools(uint64_t seed, const PoolCounts& counts,
                               const PoolOptions& opt = {});

// ---------------------------------------------------------------------------
// biographies
// ---------------------------------------------------------------------------

enum class Variant { ground_truth, contradiction };
enum class ConflictAttr { none, university, company };

const char* to_string(Variant v);
const char* to_string(ConflictAttr a);

struct BiographyRecord {
    int person_id = -1;
    std::string person_name;
    std::map<std::string, std::string> attributes;  // birth_date, birth_place, university,
                                                    // major, company, work_place
    Variant variant = Variant::ground_truth;
    ConflictAttr conflict_attribute = ConflictAttr::none;
    std::string text;
};

struct CorpusPair {
    std::vector<BiographyRecord> mix;    // N ground-truth + n1 contradictions
    std::vector<BiographyRecord> clean;  // N ground-truth
    int N = 0;
    int n1 = 0;
    int n2 = 0;
    uint64_t seed = 0;
};

// Deterministic paired corpus. The first n1 persons get one contradiction
// each (conflict attribute uniform over {university, company}); every
// attribute value used in a conflict is guaranteed to be carried by at least
// one person in the n2 subset so that clean donor prompts always exist.
CorpusPair generate_corpus(const EntityPools& pools, int N, int n1, uint64_t seed);

std::string render_biography(const std::string& name,
                             const std::map<std::string, std::string>& attributes);

// ---------------------------------------------------------------------------
// tokenizer
// ---------------------------------------------------------------------------

// Closed word-level vocabulary. A token is a word or punctuation unit
// together with its preceding space, so detokenize is plain concatenation and
// round-trips exactly.
class Tokenizer {
public:
    static Tokenizer build(const CorpusPair& corpus);

    std::vector<int32_t> tokenize(std::string_view text) const;
    std::string detokenize(const std::vector<int32_t>& ids) const;

    int32_t id(std::string_view surface) const;       // UNKNOWN_TOKEN if absent
    bool contains(std::string_view surface) const;
    const std::string& surface(int32_t id) const;
    int32_t vocab_size() const { return static_cast<int32_t>(surfaces_.size()); }

    void save(const std::string& path, uint64_t seed) const;
    static Tokenizer load(const std::string& path);

    // split into surface units without vocabulary lookup
    static std::vector<std::string> split(std::string_view text);

private:
    std::unordered_map<std::string, int32_t> vocab_;
    std::vector<std::string> surfaces_;
};

// ---------------------------------------------------------------------------
// prompt cases
// ---------------------------------------------------------------------------

struct PromptCase {
    int person_id = -1;
    std::vector<int32_t> prompt_tokens;  // shared prefix of the pair
    int32_t t1 = -1;                     // ground-truth continuation
    int32_t t2 = -1;                     // contradictory continuation
    int64_t divergence_index = 0;        // 1-based; == prompt_tokens.size() + 1
    ConflictAttr attribute_type = ConflictAttr::none;
    std::string attribute_value_t1;
    std::string attribute_value_t2;
};

std::vector<PromptCase> build_prompt_cases(const CorpusPair& corpus, const Tokenizer& tok);

// Clean single-fact source prompt: an n2-subset person carrying
// `attribute_value`, truncated immediately before the token realizing it.
struct SourcePrompt {
    int person_id = -1;  // donor
    std::vector<int32_t> prompt_tokens;
    int32_t t_s = -1;
    ConflictAttr attribute_type = ConflictAttr::none;
    std::string attribute_value;
};

SourcePrompt select_clean_source_prompt(const std::vector<PromptCase>& cases,
                                        const CorpusPair& corpus, const Tokenizer& tok,
                                        const std::string& attribute_value, int exclude_person,
                                        uint64_t seed = 0);

// ---------------------------------------------------------------------------
// persistence (line-delimited JSON with a header line) and checks
// ---------------------------------------------------------------------------

void save_corpus(const CorpusPair& corpus, const std::string& dir);
CorpusPair load_corpus(const std::string& dir);

void save_prompt_cases(const std::vector<PromptCase>& cases, const std::string& path,
                       uint64_t seed);
std::vector<PromptCase> load_prompt_cases(const std::string& path);

struct CheckReport {
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

// Module invariants checked on materialized artifacts: unique lead tokens,
// prompt correctness, attribute-category disjointness, donor coverage,
// tokenizer round-trip over every record.
CheckReport check_corpus_invariants(const CorpusPair& corpus, const Tokenizer& tok,
                                    const std::vector<PromptCase>& cases);

}  // namespace probe::corpus
