#include "probe/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "probe/rng.hpp"

namespace probe::corpus {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

const char* kMonths[12] = {"January",   "February", "March",    "April",
                           "May",       "June",     "July",     "August",
                           "September", "October",  "November", "December"};

struct FieldLexicon {
    const char* name;
    std::vector<const char*> majors;
    std::vector<const char*> postfixes;
};

const std::vector<FieldLexicon>& fields() {
    static const std::vector<FieldLexicon> k = {
        {"business", {"Economics", "Finance", "Accounting", "Marketing"}, {"Holdings", "Capital Group"}},
        {"computing", {"Computer Science", "Software Engineering", "Data Science"}, {"Software", "Systems"}},
        {"engineering", {"Mechanical Engineering", "Electrical Engineering", "Civil Engineering"}, {"Industries", "Electric Inc."}},
        {"science", {"Physics", "Chemistry", "Biology"}, {"Research Lab", "Biosciences"}},
        {"humanities", {"History", "Philosophy", "Linguistics"}, {"Press", "Media Group"}},
    };
    return k;
}

const std::vector<std::string>& work_place_lexicon() {
    static const std::vector<std::string> k = {
        "Palo Alto, California, USA", "Austin, Texas, USA",     "Seattle, Washington, USA",
        "Boston, Massachusetts, USA", "Berlin, Germany",        "Munich, Germany",
        "Toronto, Canada",            "Vancouver, Canada",      "London, United Kingdom",
        "Cambridge, United Kingdom",  "Zurich, Switzerland",    "Geneva, Switzerland",
        "Osaka, Japan",               "Tokyo, Japan",           "Sydney, Australia",
        "Dublin, Ireland",
    };
    return k;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// every word of the fixed lexicon, lowercased, so random entity words can
// never collide with template text
std::set<std::string> fixed_word_registry() {
    std::set<std::string> reg;
    auto add_words = [&reg](std::string_view text) {
        std::string w;
        for (char c : text) {
            if (std::isalnum(static_cast<unsigned char>(c))) {
                w.push_back(c);
            } else if (!w.empty()) {
                reg.insert(lower(w));
                w.clear();
            }
        }
        if (!w.empty()) reg.insert(lower(w));
    };
    add_words(
        "born on is an individual who was born and raised in Their journey into academia led "
        "them to University of where they chose to specialize in This laid the foundation for "
        "their professional career They are currently employed at which is based in");
    for (const char* m : kMonths) add_words(m);
    for (const auto& f : fields()) {
        for (const char* m : f.majors) add_words(m);
        for (const char* p : f.postfixes) add_words(p);
    }
    for (const auto& wp : work_place_lexicon()) add_words(wp);
    return reg;
}

// capitalized random word, unique against the registry
std::string fresh_word(Rng& rng, std::set<std::string>& registry, const PoolOptions& opt) {
    for (int attempt = 0; attempt < opt.retry_budget; ++attempt) {
        const int len =
            static_cast<int>(rng.uniform_int(opt.min_word_len, opt.max_word_len));
        std::string w;
        w.reserve(static_cast<size_t>(len));
        for (int i = 0; i < len; ++i)
            w.push_back(static_cast<char>('a' + rng.uniform_int(0, 25)));
        if (registry.contains(w)) continue;
        registry.insert(w);
        w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        return w;
    }
    throw CorpusError(CorpusErrc::unsatisfiable_uniqueness,
                      "could not generate a unique entity word within the retry budget");
}

const std::vector<std::string> kAttrKeys = {"birth_date", "birth_place", "university",
                                            "major",      "company",     "work_place"};

}  // namespace

std::string EntityPools::lead_word(std::string_view entity) {
    std::string_view rest = entity;
    constexpr std::string_view kUniPrefix = "University of ";
    if (rest.substr(0, kUniPrefix.size()) == kUniPrefix) rest.remove_prefix(kUniPrefix.size());
    size_t end = 0;
    while (end < rest.size() && std::isalnum(static_cast<unsigned char>(rest[end]))) ++end;
    return std::string(rest.substr(0, end));
}

EntityPools build_entity_pools(uint64_t seed, const PoolCounts& counts, const PoolOptions& opt) {
    auto check_count = [](int c, const char* what) {
        if (c <= 0 || c > 10000)
            throw CorpusError(CorpusErrc::bad_precondition,
                              std::string(what) + " count must be in [1, 10000]");
    };
    check_count(counts.birth_places, "birth_places");
    check_count(counts.universities, "universities");
    check_count(counts.companies, "companies");
    check_count(counts.names, "names");

    Rng rng(seed);
    std::set<std::string> registry = fixed_word_registry();
    EntityPools pools;
    pools.n_fields = static_cast<int>(fields().size());

    for (int i = 0; i < counts.birth_places; ++i) {
        const std::string city = fresh_word(rng, registry, opt);
        const std::string country = fresh_word(rng, registry, opt);
        pools.birth_places.push_back(city + ", " + country);
    }
    for (int i = 0; i < counts.universities; ++i)
        pools.universities.push_back("University of " + fresh_word(rng, registry, opt));

    // companies spread across fields so a same-field alternative exists
    // whenever the pool allows one
    const int fields_used =
        std::clamp(counts.companies / 2, 1, static_cast<int>(fields().size()));
    for (int i = 0; i < counts.companies; ++i) {
        const int f = i % fields_used;
        const auto& postfixes = fields()[static_cast<size_t>(f)].postfixes;
        const auto& postfix =
            postfixes[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(postfixes.size()) - 1))];
        pools.companies.push_back(fresh_word(rng, registry, opt) + " " + postfix);
        pools.company_field.push_back(f);
        pools.company_work_place.push_back(static_cast<int>(
            rng.uniform_int(0, static_cast<int64_t>(work_place_lexicon().size()) - 1)));
    }
    for (size_t f = 0; f < fields().size(); ++f)
        for (const char* m : fields()[f].majors) {
            pools.majors.push_back(m);
            pools.major_field.push_back(static_cast<int>(f));
        }
    pools.work_places = work_place_lexicon();

    // surnames are shared across persons; first names are one-per-person
    std::vector<std::string> surnames;
    const int n_surnames = std::min(64, counts.names);
    for (int i = 0; i < n_surnames; ++i) surnames.push_back(fresh_word(rng, registry, opt));
    for (int i = 0; i < counts.names; ++i) {
        const std::string first = fresh_word(rng, registry, opt);
        const auto& last =
            surnames[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(surnames.size()) - 1))];
        pools.names.push_back(first + " " + last);
    }
    return pools;
}

const char* to_string(Variant v) {
    return v == Variant::ground_truth ? "ground_truth" : "contradiction";
}

const char* to_string(ConflictAttr a) {
    switch (a) {
        case ConflictAttr::university: return "university";
        case ConflictAttr::company: return "company";
        default: return "none";
    }
}

std::string render_biography(const std::string& name,
                             const std::map<std::string, std::string>& attributes) {
    const auto& a = attributes;
    return name + " (born on " + a.at("birth_date") + ") is an individual who was born and raised in " +
           a.at("birth_place") + ". Their journey into academia led them to " + a.at("university") +
           ", where they chose to specialize in " + a.at("major") +
           ". This laid the foundation for their professional career. They are currently employed at " +
           a.at("company") + ", which is based in " + a.at("work_place") + ".";
}

namespace {

struct PersonDraft {
    std::string name;
    std::string birth_date;
    int birth_place = 0;
    int university = 0;
    int major = 0;
    int company = 0;
    // conflict side, only for the first n1 persons
    ConflictAttr conflict = ConflictAttr::none;
    int alt_university = -1;
    int alt_major = -1;
    int alt_company = -1;
};

int pick_other_same_field(Rng& rng, const std::vector<int>& field_of, int field, int avoid,
                          const char* what) {
    std::vector<int> options;
    for (size_t i = 0; i < field_of.size(); ++i)
        if (field_of[i] == field && static_cast<int>(i) != avoid) options.push_back(static_cast<int>(i));
    if (options.empty())
        throw CorpusError(CorpusErrc::pool_exhausted,
                          std::string("no same-field alternative ") + what + " available");
    return options[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(options.size()) - 1))];
}

// Reassign n2-subset attribute slots until every needed value has a carrier.
// `slot_of` maps person index (within the n2 range) to their pool index for
// the attribute; `needed` holds pool indices used by conflicts.
void ensure_coverage(std::vector<int>& slot_of, const std::vector<int>& needed_sorted,
                     const char* what) {
    std::map<int, int> carriers;
    for (int v : slot_of) ++carriers[v];
    std::set<int> needed(needed_sorted.begin(), needed_sorted.end());
    if (needed.size() > slot_of.size())
        throw CorpusError(CorpusErrc::donor_coverage_infeasible,
                          std::string("n2 subset too small to carry every conflicting ") + what +
                              " value (" + std::to_string(needed.size()) + " needed, " +
                              std::to_string(slot_of.size()) + " persons)");
    for (int v : needed) {
        if (carriers[v] > 0) continue;
        // prefer donors whose current value is not needed, then over-covered ones
        int pick = -1;
        for (size_t p = 0; p < slot_of.size(); ++p) {
            if (!needed.contains(slot_of[p])) {
                pick = static_cast<int>(p);
                break;
            }
        }
        if (pick < 0) {
            for (size_t p = 0; p < slot_of.size(); ++p) {
                if (carriers[slot_of[p]] > 1) {
                    pick = static_cast<int>(p);
                    break;
                }
            }
        }
        if (pick < 0)
            throw CorpusError(CorpusErrc::donor_coverage_infeasible,
                              std::string("cannot rebalance n2 ") + what +
                                  " assignments to cover every conflict value");
        --carriers[slot_of[static_cast<size_t>(pick)]];
        slot_of[static_cast<size_t>(pick)] = v;
        ++carriers[v];
    }
}

BiographyRecord make_record(int person_id, const EntityPools& pools, const PersonDraft& d,
                            bool contradiction) {
    BiographyRecord r;
    r.person_id = person_id;
    r.person_name = d.name;
    r.variant = contradiction ? Variant::contradiction : Variant::ground_truth;
    r.conflict_attribute = contradiction ? d.conflict : ConflictAttr::none;
    int uni = d.university, maj = d.major, comp = d.company;
    if (contradiction && d.conflict == ConflictAttr::university) {
        uni = d.alt_university;
        maj = d.alt_major;
    } else if (contradiction && d.conflict == ConflictAttr::company) {
        comp = d.alt_company;
    }
    r.attributes["birth_date"] = d.birth_date;
    r.attributes["birth_place"] = pools.birth_places[static_cast<size_t>(d.birth_place)];
    r.attributes["university"] = pools.universities[static_cast<size_t>(uni)];
    r.attributes["major"] = pools.majors[static_cast<size_t>(maj)];
    r.attributes["company"] = pools.companies[static_cast<size_t>(comp)];
    r.attributes["work_place"] =
        pools.work_places[static_cast<size_t>(pools.company_work_place[static_cast<size_t>(comp)])];
    r.text = render_biography(r.person_name, r.attributes);
    return r;
}

}  // namespace

CorpusPair generate_corpus(const EntityPools& pools, int N, int n1, uint64_t seed) {
    if (N < 0 || n1 < 0 || n1 > N)
        throw CorpusError(CorpusErrc::bad_precondition, "need 0 <= n1 <= N");
    if (pools.birth_places.empty() || pools.universities.empty() || pools.companies.empty() ||
        pools.majors.empty() || pools.work_places.empty())
        throw CorpusError(CorpusErrc::bad_precondition, "entity pools must be nonempty");
    if (N > static_cast<int>(pools.names.size()))
        throw CorpusError(CorpusErrc::pool_exhausted,
                          "name pool has " + std::to_string(pools.names.size()) +
                              " entries but N=" + std::to_string(N));

    Rng rng(seed);
    std::vector<PersonDraft> drafts(static_cast<size_t>(N));

    for (int i = 0; i < N; ++i) {
        PersonDraft& d = drafts[static_cast<size_t>(i)];
        d.name = pools.names[static_cast<size_t>(i)];
        const int month = static_cast<int>(rng.uniform_int(0, 11));
        const int day = static_cast<int>(rng.uniform_int(1, 28));
        const int year = static_cast<int>(rng.uniform_int(1940, 1999));
        d.birth_date = std::string(kMonths[month]) + " " + std::to_string(day) + ", " +
                       std::to_string(year);
        d.birth_place =
            static_cast<int>(rng.uniform_int(0, static_cast<int64_t>(pools.birth_places.size()) - 1));
        d.university =
            static_cast<int>(rng.uniform_int(0, static_cast<int64_t>(pools.universities.size()) - 1));
        d.company =
            static_cast<int>(rng.uniform_int(0, static_cast<int64_t>(pools.companies.size()) - 1));
        // the person works in the field they studied
        const int field = pools.company_field[static_cast<size_t>(d.company)];
        std::vector<int> field_majors;
        for (size_t m = 0; m < pools.majors.size(); ++m)
            if (pools.major_field[m] == field) field_majors.push_back(static_cast<int>(m));
        if (field_majors.empty())
            throw CorpusError(CorpusErrc::bad_precondition, "no major available for company field");
        d.major = field_majors[static_cast<size_t>(
            rng.uniform_int(0, static_cast<int64_t>(field_majors.size()) - 1))];
    }

    // conflict side for the first n1 persons
    for (int i = 0; i < n1; ++i) {
        PersonDraft& d = drafts[static_cast<size_t>(i)];
        d.conflict = rng.uniform_int(0, 1) == 0 ? ConflictAttr::university : ConflictAttr::company;
        if (d.conflict == ConflictAttr::university) {
            if (pools.universities.size() < 2)
                throw CorpusError(CorpusErrc::pool_exhausted,
                                  "university conflicts need at least two universities");
            int alt = d.university;
            while (alt == d.university)
                alt = static_cast<int>(
                    rng.uniform_int(0, static_cast<int64_t>(pools.universities.size()) - 1));
            d.alt_university = alt;
            const int field = pools.major_field[static_cast<size_t>(d.major)];
            d.alt_major = pick_other_same_field(rng, pools.major_field, field, d.major, "major");
        } else {
            const int field = pools.company_field[static_cast<size_t>(d.company)];
            d.alt_company =
                pick_other_same_field(rng, pools.company_field, field, d.company, "company");
        }
    }

    // donor coverage: every conflicting value must be carried by the n2 subset
    if (n1 > 0) {
        std::vector<int> needed_unis, needed_comps;
        for (int i = 0; i < n1; ++i) {
            const PersonDraft& d = drafts[static_cast<size_t>(i)];
            if (d.conflict == ConflictAttr::university) {
                needed_unis.push_back(d.university);
                needed_unis.push_back(d.alt_university);
            } else {
                needed_comps.push_back(d.company);
                needed_comps.push_back(d.alt_company);
            }
        }
        std::sort(needed_unis.begin(), needed_unis.end());
        std::sort(needed_comps.begin(), needed_comps.end());

        std::vector<int> uni_slots, comp_slots;
        for (int i = n1; i < N; ++i) {
            uni_slots.push_back(drafts[static_cast<size_t>(i)].university);
            comp_slots.push_back(drafts[static_cast<size_t>(i)].company);
        }
        ensure_coverage(uni_slots, needed_unis, "university");
        ensure_coverage(comp_slots, needed_comps, "company");
        for (int i = n1; i < N; ++i) {
            PersonDraft& d = drafts[static_cast<size_t>(i)];
            d.university = uni_slots[static_cast<size_t>(i - n1)];
            const int new_comp = comp_slots[static_cast<size_t>(i - n1)];
            if (new_comp != d.company) {
                d.company = new_comp;
                // keep the studied-field constraint after the company moved
                const int field = pools.company_field[static_cast<size_t>(d.company)];
                if (pools.major_field[static_cast<size_t>(d.major)] != field) {
                    std::vector<int> field_majors;
                    for (size_t m = 0; m < pools.majors.size(); ++m)
                        if (pools.major_field[m] == field)
                            field_majors.push_back(static_cast<int>(m));
                    d.major = field_majors[static_cast<size_t>(
                        rng.uniform_int(0, static_cast<int64_t>(field_majors.size()) - 1))];
                }
            }
        }
    }

    CorpusPair out;
    out.N = N;
    out.n1 = n1;
    out.n2 = N - n1;
    out.seed = seed;
    for (int i = 0; i < N; ++i) {
        const PersonDraft& d = drafts[static_cast<size_t>(i)];
        BiographyRecord gt = make_record(i, pools, d, false);
        out.clean.push_back(gt);
        out.mix.push_back(std::move(gt));
        if (i < n1) out.mix.push_back(make_record(i, pools, d, true));
    }
    return out;
}

// ---------------------------------------------------------------------------
// tokenizer
// ---------------------------------------------------------------------------

std::vector<std::string> Tokenizer::split(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        std::string tok;
        if (text[i] == ' ' && i + 1 < text.size()) {
            tok.push_back(' ');
            ++i;
        }
        if (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) {
            while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i])))
                tok.push_back(text[i++]);
        } else if (i < text.size()) {
            tok.push_back(text[i++]);
        }
        out.push_back(std::move(tok));
    }
    return out;
}

Tokenizer Tokenizer::build(const CorpusPair& corpus) {
    std::set<std::string> surfaces;
    for (const auto& r : corpus.mix)
        for (auto& s : split(r.text)) surfaces.insert(std::move(s));
    for (const auto& r : corpus.clean)
        for (auto& s : split(r.text)) surfaces.insert(std::move(s));
    Tokenizer tok;
    for (const auto& s : surfaces) {
        tok.vocab_.emplace(s, static_cast<int32_t>(tok.surfaces_.size()));
        tok.surfaces_.push_back(s);
    }
    if (tok.vocab_size() > 4096)
        throw CorpusError(CorpusErrc::vocab_overflow,
                          "closed vocabulary exceeds 4096 entries: " +
                              std::to_string(tok.vocab_size()));
    return tok;
}

std::vector<int32_t> Tokenizer::tokenize(std::string_view text) const {
    std::vector<int32_t> out;
    for (const auto& s : split(text)) {
        auto it = vocab_.find(s);
        if (it == vocab_.end())
            throw CorpusError(CorpusErrc::unknown_token, "unknown token surface: '" + s + "'");
        out.push_back(it->second);
    }
    return out;
}

std::string Tokenizer::detokenize(const std::vector<int32_t>& ids) const {
    std::string out;
    for (int32_t id : ids) out += surface(id);
    return out;
}

int32_t Tokenizer::id(std::string_view surface) const {
    auto it = vocab_.find(std::string(surface));
    if (it == vocab_.end())
        throw CorpusError(CorpusErrc::unknown_token,
                          "unknown token surface: '" + std::string(surface) + "'");
    return it->second;
}

bool Tokenizer::contains(std::string_view surface) const {
    return vocab_.find(std::string(surface)) != vocab_.end();
}

const std::string& Tokenizer::surface(int32_t id) const {
    if (id < 0 || id >= vocab_size())
        throw CorpusError(CorpusErrc::unknown_token, "token id out of range: " + std::to_string(id));
    return surfaces_[static_cast<size_t>(id)];
}

void Tokenizer::save(const std::string& path, uint64_t seed) const {
    json j;
    j["format_version"] = kFormatVersion;
    j["seed"] = seed;
    json vocab = json::object();
    for (int32_t i = 0; i < vocab_size(); ++i) vocab[surfaces_[static_cast<size_t>(i)]] = i;
    j["vocab"] = std::move(vocab);
    std::ofstream out(path);
    if (!out) throw CorpusError(CorpusErrc::io_error, "cannot write " + path);
    out << j.dump(2) << "\n";
}

Tokenizer Tokenizer::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError(CorpusErrc::io_error, "cannot read " + path);
    json j = json::parse(in);
    Tokenizer tok;
    tok.surfaces_.resize(j.at("vocab").size());
    for (auto& [surface, id] : j.at("vocab").items()) {
        const auto i = id.get<int32_t>();
        tok.vocab_.emplace(surface, i);
        tok.surfaces_[static_cast<size_t>(i)] = surface;
    }
    return tok;
}

// ---------------------------------------------------------------------------
// prompt cases
// ---------------------------------------------------------------------------

std::vector<PromptCase> build_prompt_cases(const CorpusPair& corpus, const Tokenizer& tok) {
    if (corpus.n1 < 1)
        throw CorpusError(CorpusErrc::bad_precondition,
                          "prompt cases need at least one contradiction pair");
    std::vector<PromptCase> cases;
    for (size_t r = 0; r + 1 < corpus.mix.size(); ++r) {
        const BiographyRecord& gt = corpus.mix[r];
        const BiographyRecord& alt = corpus.mix[r + 1];
        if (!(gt.variant == Variant::ground_truth && alt.variant == Variant::contradiction &&
              gt.person_id == alt.person_id))
            continue;
        const std::vector<int32_t> a = tok.tokenize(gt.text);
        const std::vector<int32_t> b = tok.tokenize(alt.text);
        size_t n = 0;
        while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
        if (n == a.size() || n == b.size())
            throw CorpusError(CorpusErrc::no_divergence,
                              "pair tokenizations never diverge for person " +
                                  std::to_string(gt.person_id));
        PromptCase c;
        c.person_id = gt.person_id;
        c.prompt_tokens.assign(a.begin(), a.begin() + static_cast<int64_t>(n));
        c.t1 = a[n];
        c.t2 = b[n];
        c.divergence_index = static_cast<int64_t>(n) + 1;
        c.attribute_type = alt.conflict_attribute;
        const char* key = to_string(alt.conflict_attribute);
        c.attribute_value_t1 = gt.attributes.at(key);
        c.attribute_value_t2 = alt.attributes.at(key);
        cases.push_back(std::move(c));
    }
    return cases;
}

SourcePrompt select_clean_source_prompt(const std::vector<PromptCase>& cases,
                                        const CorpusPair& corpus, const Tokenizer& tok,
                                        const std::string& attribute_value, int exclude_person,
                                        uint64_t seed) {
    ConflictAttr attr = ConflictAttr::none;
    for (const auto& c : cases) {
        if (c.attribute_value_t1 == attribute_value || c.attribute_value_t2 == attribute_value) {
            attr = c.attribute_type;
            break;
        }
    }
    std::vector<const BiographyRecord*> candidates;
    for (const auto& r : corpus.clean) {
        if (r.person_id < corpus.n1 || r.person_id == exclude_person) continue;
        if (r.attributes.at("university") == attribute_value) {
            attr = ConflictAttr::university;
            candidates.push_back(&r);
        } else if (r.attributes.at("company") == attribute_value) {
            attr = ConflictAttr::company;
            candidates.push_back(&r);
        }
    }
    if (candidates.empty())
        throw CorpusError(CorpusErrc::no_clean_donor,
                          "no clean-subset person carries value '" + attribute_value + "'");
    // candidates are in ascending person_id order; seed 0 keeps the smallest
    const BiographyRecord& donor =
        *candidates[static_cast<size_t>(seed % candidates.size())];

    const std::string lead = " " + EntityPools::lead_word(attribute_value);
    const int32_t value_token = tok.id(lead);
    const std::vector<int32_t> tokens = tok.tokenize(donor.text);
    size_t cut = 0;
    while (cut < tokens.size() && tokens[cut] != value_token) ++cut;
    if (cut == tokens.size())
        throw CorpusError(CorpusErrc::no_clean_donor,
                          "donor text does not realize value '" + attribute_value + "'");
    SourcePrompt sp;
    sp.person_id = donor.person_id;
    sp.prompt_tokens.assign(tokens.begin(), tokens.begin() + static_cast<int64_t>(cut));
    sp.t_s = value_token;
    sp.attribute_type = attr;
    sp.attribute_value = attribute_value;
    return sp;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

namespace {

json record_to_json(const BiographyRecord& r) {
    json j;
    j["person_id"] = r.person_id;
    j["person_name"] = r.person_name;
    j["variant"] = to_string(r.variant);
    if (r.conflict_attribute == ConflictAttr::none)
        j["conflict_attribute"] = nullptr;
    else
        j["conflict_attribute"] = to_string(r.conflict_attribute);
    j["text"] = r.text;
    j["attributes"] = r.attributes;
    return j;
}

BiographyRecord record_from_json(const json& j) {
    BiographyRecord r;
    r.person_id = j.at("person_id").get<int>();
    r.person_name = j.at("person_name").get<std::string>();
    r.variant = j.at("variant").get<std::string>() == "contradiction" ? Variant::contradiction
                                                                      : Variant::ground_truth;
    if (j.at("conflict_attribute").is_null())
        r.conflict_attribute = ConflictAttr::none;
    else
        r.conflict_attribute = j.at("conflict_attribute").get<std::string>() == "university"
                                   ? ConflictAttr::university
                                   : ConflictAttr::company;
    r.text = j.at("text").get<std::string>();
    for (auto& [k, v] : j.at("attributes").items()) r.attributes[k] = v.get<std::string>();
    return r;
}

void save_records(const std::vector<BiographyRecord>& records, const std::string& path,
                  const char* kind, const CorpusPair& corpus) {
    std::ofstream out(path);
    if (!out) throw CorpusError(CorpusErrc::io_error, "cannot write " + path);
    json header;
    header["format_version"] = kFormatVersion;
    header["kind"] = kind;
    header["seed"] = corpus.seed;
    header["N"] = corpus.N;
    header["n1"] = corpus.n1;
    out << header.dump() << "\n";
    for (const auto& r : records) out << record_to_json(r).dump() << "\n";
}

std::vector<BiographyRecord> load_records(const std::string& path, json& header) {
    std::ifstream in(path);
    if (!in) throw CorpusError(CorpusErrc::io_error, "cannot read " + path);
    std::string line;
    if (!std::getline(in, line))
        throw CorpusError(CorpusErrc::io_error, "missing header line in " + path);
    header = json::parse(line);
    std::vector<BiographyRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(record_from_json(json::parse(line)));
    }
    return out;
}

}  // namespace

void save_corpus(const CorpusPair& corpus, const std::string& dir) {
    save_records(corpus.mix, dir + "/mix.jsonl", "corpus_mix", corpus);
    save_records(corpus.clean, dir + "/clean.jsonl", "corpus_clean", corpus);
}

CorpusPair load_corpus(const std::string& dir) {
    CorpusPair out;
    json header;
    out.mix = load_records(dir + "/mix.jsonl", header);
    out.seed = header.at("seed").get<uint64_t>();
    out.N = header.at("N").get<int>();
    out.n1 = header.at("n1").get<int>();
    out.n2 = out.N - out.n1;
    json header2;
    out.clean = load_records(dir + "/clean.jsonl", header2);
    return out;
}

void save_prompt_cases(const std::vector<PromptCase>& cases, const std::string& path,
                       uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw CorpusError(CorpusErrc::io_error, "cannot write " + path);
    json header;
    header["format_version"] = kFormatVersion;
    header["kind"] = "prompt_cases";
    header["seed"] = seed;
    header["count"] = cases.size();
    out << header.dump() << "\n";
    for (const auto& c : cases) {
        json j;
        j["person_id"] = c.person_id;
        j["prompt_tokens"] = c.prompt_tokens;
        j["t1"] = c.t1;
        j["t2"] = c.t2;
        j["divergence_index"] = c.divergence_index;
        j["attribute_type"] = to_string(c.attribute_type);
        j["attribute_value_t1"] = c.attribute_value_t1;
        j["attribute_value_t2"] = c.attribute_value_t2;
        out << j.dump() << "\n";
    }
}

std::vector<PromptCase> load_prompt_cases(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError(CorpusErrc::io_error, "cannot read " + path);
    std::string line;
    if (!std::getline(in, line))
        throw CorpusError(CorpusErrc::io_error, "missing header line in " + path);
    std::vector<PromptCase> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        PromptCase c;
        c.person_id = j.at("person_id").get<int>();
        c.prompt_tokens = j.at("prompt_tokens").get<std::vector<int32_t>>();
        c.t1 = j.at("t1").get<int32_t>();
        c.t2 = j.at("t2").get<int32_t>();
        c.divergence_index = j.at("divergence_index").get<int64_t>();
        const std::string attr = j.at("attribute_type").get<std::string>();
        c.attribute_type = attr == "university" ? ConflictAttr::university
                          : attr == "company"   ? ConflictAttr::company
                                                : ConflictAttr::none;
        c.attribute_value_t1 = j.at("attribute_value_t1").get<std::string>();
        c.attribute_value_t2 = j.at("attribute_value_t2").get<std::string>();
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// invariant checks
// ---------------------------------------------------------------------------

CheckReport check_corpus_invariants(const CorpusPair& corpus, const Tokenizer& tok,
                                    const std::vector<PromptCase>& cases) {
    CheckReport rep;
    auto fail = [&rep](std::string msg) { rep.failures.push_back(std::move(msg)); };

    // tokenizer round-trip over every record
    for (const auto& r : corpus.mix) {
        try {
            if (tok.detokenize(tok.tokenize(r.text)) != r.text)
                fail("round-trip mismatch for person " + std::to_string(r.person_id));
        } catch (const CorpusError& e) {
            fail(std::string("tokenize failed: ") + e.what());
        }
    }

    // lead tokens of distinct entity values are distinct across all categories
    std::map<std::string, std::string> lead_to_value;
    for (const auto& r : corpus.clean) {
        for (const char* key : {"birth_place", "university", "company"}) {
            const std::string& value = r.attributes.at(key);
            const std::string lead = EntityPools::lead_word(value);
            auto [it, inserted] = lead_to_value.emplace(lead, value);
            if (!inserted && it->second != value)
                fail("lead token '" + lead + "' shared by '" + it->second + "' and '" + value + "'");
        }
    }

    // prompt correctness against regenerated tokenizations
    std::map<int, const BiographyRecord*> gt_by_person, alt_by_person;
    for (const auto& r : corpus.mix) {
        if (r.variant == Variant::ground_truth)
            gt_by_person[r.person_id] = &r;
        else
            alt_by_person[r.person_id] = &r;
    }
    for (const auto& c : cases) {
        const auto g = gt_by_person.find(c.person_id);
        const auto a = alt_by_person.find(c.person_id);
        if (g == gt_by_person.end() || a == alt_by_person.end()) {
            fail("case person " + std::to_string(c.person_id) + " missing records");
            continue;
        }
        const auto tg = tok.tokenize(g->second->text);
        const auto ta = tok.tokenize(a->second->text);
        const size_t n = c.prompt_tokens.size();
        if (c.divergence_index != static_cast<int64_t>(n) + 1)
            fail("divergence_index mismatch for person " + std::to_string(c.person_id));
        if (tg.size() <= n || ta.size() <= n || tg[n] != c.t1 || ta[n] != c.t2 ||
            c.t1 == c.t2 ||
            !std::equal(c.prompt_tokens.begin(), c.prompt_tokens.end(), tg.begin()) ||
            !std::equal(c.prompt_tokens.begin(), c.prompt_tokens.end(), ta.begin()))
            fail("prompt tokens disagree with pair tokenization for person " +
                 std::to_string(c.person_id));
    }

    // each conflict token belongs to exactly one attribute category
    std::map<int32_t, ConflictAttr> token_category;
    for (const auto& c : cases) {
        for (int32_t t : {c.t1, c.t2}) {
            auto [it, inserted] = token_category.emplace(t, c.attribute_type);
            if (!inserted && it->second != c.attribute_type)
                fail("conflict token " + std::to_string(t) + " spans two attribute categories");
        }
    }

    // donor coverage for every conflicting value
    for (const auto& c : cases) {
        for (const std::string& value : {c.attribute_value_t1, c.attribute_value_t2}) {
            try {
                select_clean_source_prompt(cases, corpus, tok, value, c.person_id);
            } catch (const CorpusError&) {
                fail("no clean donor for value '" + value + "'");
            }
        }
    }
    return rep;
}

}  // namespace probe::corpus
