#!/usr/bin/env python3
# Copyright 2026 The dialearn Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the bundled fruit domain: ontology, domain vectors, test fixture.

The outputs are committed; rerun only when the domain design changes.
    python3 tools/make_domain_assets.py
"""

import json
import os

import numpy as np

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

ACT_TYPES = [
    "hello", "bye", "inform", "request", "confirm", "affirm", "negate", "offer",
    "select", "reqalts", "reqmore", "help", "repeat", "restart", "ack", "thankyou",
]

VALUES = {
    "fruit": ["apple", "lemon", "banana", "pear", "strawberry", "orange", "cherry",
              "pineapple"],
    "color": ["red", "yellow", "green", "purple", "pink", "brown", "blue"],
    "seems": ["upside_down", "happy", "sad", "angry", "tired", "scared"],
    "possesses": ["eyes", "arms", "legs", "mouth", "hat", "cape", "glasses"],
    "looks_like": ["superhero", "spiderman", "clown", "robot", "monster", "baby"],
    "shape": ["round", "long", "square", "twisted"],
    "size": ["tiny", "big", "giant"],
    "texture": ["shiny", "rotten", "spotted", "peeled"],
    "message": ["gmo", "pesticides", "healthy_eating", "obesity", "food_waste",
                "organic"],
}

VALUE_LEX = {
    "apple": ["apple"], "lemon": ["lemon"], "banana": ["banana"], "pear": ["pear"],
    "strawberry": ["strawberry"], "orange": ["orange"], "cherry": ["cherry"],
    "pineapple": ["pineapple"],
    "upside_down": ["upside down"], "healthy_eating": ["healthy eating"],
    "food_waste": ["food waste"], "gmo": ["gmo", "gmos", "genetically modified"],
    "eyes": ["eyes"], "arms": ["arms"], "legs": ["legs"],
}

SLOT_LEX = {
    "fruit": ["fruit"], "color": ["color", "colour"], "seems": ["mood"],
    "possesses": ["features"], "looks_like": ["resemble"],
    "shape": ["shape"], "size": ["size"], "texture": ["texture"],
    "message": ["message"],
}

MESSAGE_TEXT = {
    "gmo": "genetically modified food, like several superheroes",
    "pesticides": "the danger of pesticides on fruit",
    "healthy_eating": "eating fruit every day keeps you healthy",
    "obesity": "fighting obesity with fresh food",
    "food_waste": "we throw away too much food",
    "organic": "organic farming is better for everyone",
}

FRUIT_COLORS = {
    "apple": ["red", "green", "yellow"], "lemon": ["yellow", "green"],
    "banana": ["yellow", "green", "brown"], "pear": ["green", "yellow", "brown"],
    "strawberry": ["red", "pink"], "orange": ["brown", "green", "blue"],
    "cherry": ["red", "purple", "pink"], "pineapple": ["yellow", "brown", "blue"],
}


def message_for(attrs):
    if attrs["looks_like"] in ("superhero", "spiderman") or attrs["possesses"] == "cape":
        return "gmo"
    if attrs["texture"] == "rotten":
        return "food_waste"
    if attrs["texture"] == "shiny" or attrs["looks_like"] == "robot":
        return "pesticides"
    if attrs["size"] == "giant":
        return "obesity"
    if attrs["seems"] in ("happy",) or attrs["texture"] == "peeled":
        return "healthy_eating"
    return "organic"


def make_entities(rng, count):
    seen = set()
    entities = []
    while len(entities) < count:
        fruit = str(rng.choice(VALUES["fruit"]))
        attrs = {
            "fruit": fruit,
            "color": str(rng.choice(FRUIT_COLORS[fruit])),
            "seems": str(rng.choice(VALUES["seems"])),
            "possesses": str(rng.choice(VALUES["possesses"])),
            "looks_like": str(rng.choice(VALUES["looks_like"])),
            "shape": str(rng.choice(VALUES["shape"])),
            "size": str(rng.choice(VALUES["size"])),
            "texture": str(rng.choice(VALUES["texture"])),
        }
        key = tuple(sorted(attrs.items()))
        if key in seen:
            continue
        seen.add(key)
        attrs["message"] = message_for(attrs)
        eid = "e%d" % len(entities)
        entities.append({"id": eid, "attributes": attrs,
                         "message": MESSAGE_TEXT[attrs["message"]]})
    return entities


def write_ontology(rng):
    lex = {}
    for slot, vals in VALUES.items():
        for v in vals:
            lex[v] = VALUE_LEX.get(v, [v.replace("_", " ")])
    onto = {
        "acttypes": ACT_TYPES,
        "slots": list(VALUES.keys()),
        "values": VALUES,
        "lexicalizations": {"values": lex, "slots": SLOT_LEX},
        "entities": make_entities(rng, 300),
    }
    with open(os.path.join(ROOT, "domains", "fruits.json"), "w") as f:
        json.dump(onto, f, indent=1)
        f.write("\n")


# Words outside every concept direction. Frequent function words get a small
# norm, as in corpus-trained spaces, so they barely move a chunk's mean.
FUNCTION_WORDS = [
    "i", "see", "a", "an", "the", "it", "is", "its", "has", "have", "looks", "like",
    "there", "are", "and", "with", "can", "we", "talk", "about", "this", "of",
    "because", "seems", "to", "be", "think", "so", "what", "picture", "which",
    "really", "quite", "very", "my", "oh", "by", "swear", "what's", "well", "also",
    "um", "uh", "that", "maybe", "does", "how", "who", "ah", "on", "one", "me",
    "such", "tell", "your", "his",
]
FUNCTION_NORM = 0.05
OTHER_WORDS = [
    "hit", "sea", "ice", "bread", "read", "eggs", "alarms", "bear", "pair",
    "cat", "chapel", "sherry", "said", "tinny", "around", "pig", "yet", "know", "buy",
    "lemming", "mad", "ink", "pin", "lung", "squared", "hippie", "rounder",
]

# (word, [(concept, weight), ...]); weights are cosine targets before noise.
CONCEPT_NEIGHBOURS = [
    # close synonyms: resolvable zero-shot
    ("crimson", [("red", 0.92)]), ("golden", [("yellow", 0.9)]),
    ("emerald", [("green", 0.9)]), ("violet", [("purple", 0.9)]),
    ("azure", [("blue", 0.9)]), ("joyful", [("happy", 0.9)]),
    ("unhappy", [("sad", 0.9)]), ("furious", [("angry", 0.9)]),
    ("sleepy", [("tired", 0.9)]), ("frightened", [("scared", 0.9)]),
    ("hands", [("arms", 0.85)]), ("feet", [("legs", 0.85)]),
    ("lips", [("mouth", 0.88)]), ("spectacles", [("glasses", 0.9)]),
    ("hero", [("superhero", 0.9)]), ("jester", [("clown", 0.88)]),
    ("android", [("robot", 0.9)]), ("beast", [("monster", 0.88)]),
    ("infant", [("baby", 0.9)]), ("circular", [("round", 0.9)]),
    ("elongated", [("long", 0.9)]), ("small", [("tiny", 0.9)]),
    ("large", [("big", 0.9)]), ("huge", [("giant", 0.88)]),
    ("glossy", [("shiny", 0.9)]), ("decayed", [("rotten", 0.9)]),
    ("dotted", [("spotted", 0.9)]), ("skinned", [("peeled", 0.88)]),
    ("yeah", [("yes", 0.88)]), ("yep", [("yes", 0.85)]),
    ("nope", [("no", 0.88)]), ("not", [("no", 0.8)]), ("goodbye", [("bye", 0.95)]),
    ("cheers", [("thanks", 0.85)]), ("okay", [("ok", 0.95)]),
    ("hey", [("hello", 0.88)]),
    # ambiguous synonyms: the nearest seeded concept is the wrong one
    ("scarlet", [("pink", 0.66), ("red", 0.58)]),
    ("lime", [("lemon", 0.66), ("green", 0.56)]),
    ("grumpy", [("tired", 0.64), ("angry", 0.58)]),
    ("bonnet", [("glasses", 0.62), ("hat", 0.57)]),
    ("cloak", [("spiderman", 0.63), ("cape", 0.58)]),
    ("toddler", [("clown", 0.62), ("baby", 0.58)]),
    ("inverted", [("twisted", 0.64), ("upside_down", 0.57)]),
    ("enormous", [("big", 0.65), ("giant", 0.57)]),
    ("mouldy", [("spotted", 0.63), ("rotten", 0.58)]),
    # distractors: near a concept the user does not mean
    ("gods", [("superhero", 0.8)]), ("hatred", [("hat", 0.78)]),
    ("armchair", [("arms", 0.76)]), ("legend", [("legs", 0.77)]),
    ("babysitter", [("baby", 0.76)]), ("capers", [("cape", 0.75)]),
    ("bluetooth", [("blue", 0.77)]), ("sadly", [("sad", 0.78)]),
]

GENERIC_WORDS = {
    "hello": ["hello", "hi"], "bye": ["bye"], "affirm": ["yes", "right"],
    "negate": ["no"], "reqalts": ["something", "else", "another"],
    "reqmore": ["more"], "help": ["help"], "repeat": ["repeat", "again"],
    "restart": ["restart", "start", "over"], "ack": ["ok"],
    "thankyou": ["thanks", "thank", "you"],
}

SLOT_WORDS = {
    "fruit": ["fruit"], "color": ["color", "colour"], "seems": ["mood"],
    "possesses": ["features"], "looks_like": ["resemble"],
    "shape": ["shape"], "size": ["size"], "texture": ["texture"],
    "message": ["message"],
}


def unit(v):
    return v / np.linalg.norm(v)


def write_domain_vectors():
    # Concept directions first, then one private axis per word for the part of
    # its meaning no concept explains; unrelated words are exactly orthogonal.
    dim, concept_dims = 300, 76
    concepts = []
    for vals in VALUES.values():
        concepts.extend(vals)
    concepts.extend(["yes", "no", "bye", "thanks", "ok", "hello"])
    concepts.extend(g for g in GENERIC_WORDS if g not in ("affirm", "negate", "bye",
                                                          "thankyou", "ack", "hello"))
    concepts.extend("slot:" + s for s in VALUES)
    assert len(concepts) <= concept_dims, len(concepts)
    basis = {c: np.eye(dim)[i] for i, c in enumerate(concepts)}

    table = {}
    free_axes = iter(range(concept_dims, dim))

    def private():
        return np.eye(dim)[next(free_axes)]

    def put(word, vec, scale=1.0):
        if word in table:
            return
        table[word] = scale * unit(vec)

    def near(weights):
        v = np.zeros(dim)
        for c, w in weights:
            v += w * basis[c]
        rest = 1.0 - min(sum(w * w for _, w in weights), 0.999)
        return v + np.sqrt(rest) * private()

    for slot, vals in VALUES.items():
        for v in vals:
            for surface in VALUE_LEX.get(v, [v.replace("_", " ")]):
                for w in surface.split():
                    put(w, near([(v, 0.97)]))
    for word, weights in CONCEPT_NEIGHBOURS:
        mapped = [({"yes": "yes", "no": "no", "bye": "bye", "thanks": "thanks",
                    "ok": "ok", "hello": "hello"}.get(c, c), w) for c, w in weights]
        put(word, near(mapped))
    for act, words in GENERIC_WORDS.items():
        key = {"affirm": "yes", "negate": "no", "thankyou": "thanks", "ack": "ok"}.get(act, act)
        for w in words:
            put(w, near([(key, 0.97)]))
    for slot, words in SLOT_WORDS.items():
        for w in words:
            put(w, near([("slot:" + slot, 0.9)]))
    for w in FUNCTION_WORDS + OTHER_WORDS:
        if w not in table:
            put(w, private(), FUNCTION_NORM if w in FUNCTION_WORDS else 1.0)

    with open(os.path.join(ROOT, "domains", "fruits_vectors.txt"), "w") as f:
        f.write("%d %d\n" % (len(table), dim))
        for w, v in table.items():
            f.write(w + " " + " ".join("%.6f" % x for x in v) + "\n")


def write_toy_fixture(rng):
    """60 words, dim 16, five synonym clusters plus filler words."""
    dim = 16
    clusters = {
        "red": ["red", "crimson", "scarlet", "ruby"],
        "apple": ["apple", "apples", "pippin"],
        "yes": ["yes", "yeah", "yep"],
        "bye": ["bye", "goodbye", "farewell"],
        "eyes": ["eyes", "eye", "gaze"],
    }
    table = {}
    for i, (head, words) in enumerate(clusters.items()):
        base = np.eye(dim)[i]
        for j, w in enumerate(words):
            if j == 0:
                table[w] = base
                continue
            noise = np.zeros(dim)
            noise[8 + (i + j) % 8] = 1.0
            sim = 0.9 - 0.1 * (j - 1)
            table[w] = sim * base + np.sqrt(1 - sim * sim) * noise
    fillers = ["i", "see", "a", "it", "is", "has", "the", "and", "very", "looks",
               "like", "there", "are", "what", "this", "of", "to", "be", "so", "my",
               "we", "can", "talk", "about", "with", "big", "small", "green", "blue",
               "hat", "cape", "legs", "arms", "round", "long", "happy", "sad", "angry",
               "tired", "lemon", "pear", "banana", "cherry", "message"]
    for w in fillers:
        if len(table) >= 60:
            break
        v = rng.normal(size=dim)
        v[:5] = 0.0
        table[w] = v
    assert len(table) == 60, len(table)
    with open(os.path.join(ROOT, "fixtures", "toy_vectors.txt"), "w") as f:
        f.write("%d %d\n" % (len(table), dim))
        for w, v in table.items():
            v = unit(v)
            f.write(w + " " + " ".join("%.6f" % x for x in v) + "\n")


def main():
    write_ontology(np.random.default_rng(20190401))
    write_domain_vectors()
    write_toy_fixture(np.random.default_rng(11))


if __name__ == "__main__":
    main()
