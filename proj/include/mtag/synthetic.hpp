#pragma once

#include <cstdint>

#include "mtag/corpus.hpp"

namespace mtag::synth {

/// English-like treebank: clauses with noun phrases, auxiliaries, prepositional
/// attachments and coordination; Zipf-distributed open-class vocabulary with
/// derivational suffixes, noun/verb homographs and UD-style morphology
/// (Number, Tense, VerbForm, Case, Person, Definite, Degree). Always projective
/// with a single root.
Corpus english_like(std::size_t sentences, std::uint64_t seed);

/// The tag of every ambiguous word is fixed by the tag of the word after it;
/// its form alone says nothing. Other words are unambiguous.
Corpus right_context(std::size_t sentences, std::uint64_t seed);

/// Verbs with noun dependents; a dependent's label records whether its
/// Gender agrees with the verb's. Gender shows only as a suffix on open-class
/// stems, and every token also carries a constant Dummy attribute.
Corpus agreement(std::size_t sentences, std::uint64_t seed);

}  // namespace mtag::synth
