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
"""Writes the analytics fixture: 30 dialogue logs and the expected report CSV.

The CSV is computed here, independently of the C++ code, and committed.
    python3 tools/make_analytics_fixture.py
"""

import json
import os
import random
import re

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
WINDOW = 10

FRUITS = ["apple", "lemon", "banana", "pear", "cherry"]
COLORS = ["red", "yellow", "green", "purple"]
MOODS = ["happy", "sad", "angry", "tired"]
FEATURES = ["eyes", "arms", "legs", "hat"]
FILLERS = ["well", "i think", "you know", "hmm", "it's kind of", "maybe"]
DIALOGUE_ACTS = ["BoldRQ", "TentRQ", "Confirm", "FindAlt", "Split", "Repeat", "Offer", "Inform", "QMore"]


def words(text):
    out = []
    for tok in re.split(r"[^a-z0-9_'\-\x80-￿]+", text.lower()):
        tok = tok.strip("-'")
        if tok:
            out.append(tok)
    return out


def concept_count(acts):
    return sum(max(len(pairs), 1) for _, pairs in acts)


def render(acts):
    return ", ".join("%s(%s)" % (t, ",".join(s if v is None else "%s=%s" % (s, v) for s, v in pairs))
                     for t, pairs in acts)


def turn(index, user=None, oracle=None, parse=None, steps=(), system_act="", system_text=""):
    return {
        "index": index,
        "user_text": user,
        "asr_text": user,
        "oracle": render(oracle) if oracle is not None else None,
        "nbest": [[render(parse), 0.9]] if parse is not None else [],
        "final_parse": render(parse) if parse is not None else "",
        "final_confidence": 0.9 if parse is not None else 0.0,
        "adaptation": None,
        "quality_dim": None,
        "steps": [{"summary": s, "act": "" if s.startswith("Ask") else "inform()", "psi": psi, "psi_raw": None}
                  for s, psi in steps],
        "system_act": system_act,
        "system_text": system_text,
        "belief_top": {},
    }


def table_dialogue():
    """A seven-exchange successful dialogue about an upside-down apple."""
    lines = [
        ("So what about this picture?", None, None),
        ("I see a red apple.", [("inform", [("fruit", "apple"), ("color", "red")])],
         "Yes. And what can you say about it?"),
        ("It's upside-down.", [("inform", [("seems", "upside_down")])],
         "It seems to be upside-down. And it's humanised. Due to what?"),
        ("Because of its eyes.", [("inform", [("possesses", "eyes")])],
         "So, it is red and has eyes. Does it make you think of someone?"),
        ("It looks like spiderman.", [("inform", [("looks_like", "spiderman")])],
         "Indeed, I think this red apple looks like spiderman."),
        ("Can we talk about the message?", [("request", [("message", None)])],
         "I think this is related to GMOs."),
        ("Ah yes, maybe.", [("affirm", [])],
         "And GMOs are genetically modified, like several superheroes."),
        ("Yes, they are. Goodbye.", [("affirm", []), ("bye", [])], ""),
    ]
    turns = []
    for i, (text, oracle, reply) in enumerate(lines):
        if i == 0:
            turns.append(turn(0, steps=[("Greet", 0.0)], system_act="hello()", system_text=text))
            continue
        steps = [("Inform", 0.0)] if reply else [("Bye", 0.0)]
        turns.append(turn(i, text, oracle, oracle, steps, "inform()" if reply else "", reply))
    return turns


def random_dialogue(rng, index):
    n_user = rng.randint(2, 12)
    drop_oracle = rng.random() < 0.25
    turns = [turn(0, steps=[("Greet", 0.0)], system_act="hello()", system_text="Hello, what do you see?")]
    for k in range(1, n_user + 1):
        pairs = []
        text = []
        if rng.random() < 0.3:
            text.append(rng.choice(FILLERS))
        for slot, pool in (("fruit", FRUITS), ("color", COLORS), ("seems", MOODS), ("possesses", FEATURES)):
            if rng.random() < 0.4:
                v = rng.choice(pool)
                pairs.append((slot, v))
                text.append(v)
        acts = [("inform", pairs)] if pairs else [("affirm", [])]
        if rng.random() < 0.2:
            acts.append(("thankyou", []))
            text.append("thanks")
        if not text:
            text.append("yes")
        sentence = " ".join(text).capitalize() + rng.choice([".", "!", "?", " ..."])
        oracle = None if (drop_oracle and k == n_user) else acts
        parse = acts if rng.random() < 0.7 else acts[:1] + [("negate", [])]
        steps = []
        if rng.random() < 0.25:
            steps.append((rng.choice(["AskConfirm", "AskAnnotation"]), rng.choice([-1.0, 0.5, 1.0])))
        for _ in range(rng.randint(1, 2)):
            steps.append((rng.choice(DIALOGUE_ACTS), rng.choice([-1.0, 0.0, 0.0, 0.5, 1.0])))
        last = k == n_user
        if last:
            steps.append(("Bye", 0.0))
        silent = last and rng.random() < 0.5
        turns.append(turn(k, sentence, oracle, parse, steps, "" if silent else "inform()",
                          "" if silent else "Right."))
    return turns


def log(index, turns, success):
    steps = sum(len(t["steps"]) for t in turns)
    reward = -(steps - 1) + (20.0 if success else 0.0)
    return {
        "schema": 1,
        "id": "fixture-%02d" % index,
        "protocol": "BR",
        "success": success,
        "cumulative_reward": float(reward),
        "end_reason": "user_bye",
        "message_given": success,
        "survey": None,
        "turns": turns,
    }


def metrics(entry):
    turns = entry["turns"]
    user = [t for t in turns if t["user_text"] is not None]
    oracle = all(t["oracle"] is not None for t in user)
    n_turns = len(user) + sum(1 for t in turns if t["system_act"] or t["system_text"])
    concepts = 0
    for t in user:
        src = t["oracle"] if oracle else t["final_parse"]
        for act in re.findall(r"\w+\(([^)]*)\)", src):
            concepts += max(len([p for p in act.split(",") if p]), 1)
    uw = sum(len(words(t["user_text"])) for t in user) / len(user) if user else 0.0
    pos = neg = 0
    for t in turns:
        for s in t["steps"]:
            if s["summary"].startswith("Ask"):
                continue
            pos += s["psi"] > 0
            neg += s["psi"] < 0
    return [1.0 if entry["success"] else 0.0, float(n_turns), float(concepts), uw, float(pos), float(neg)]


def naive_ma(values, w):
    out = []
    for i in range(len(values)):
        lo = max(0, i - w + 1)
        out.append(sum(values[lo:i + 1]) / (i + 1 - lo))
    return out


def main():
    rng = random.Random(20190917)
    logs = [log(1, table_dialogue(), True)]
    for i in range(2, 31):
        logs.append(log(i, random_dialogue(rng, i), rng.random() < 0.6))

    names = ["success", "turns", "concepts", "utterance_words", "positive_feedback", "negative_feedback"]
    cols = list(zip(*[metrics(l) for l in logs]))
    smoothed = [naive_ma(list(c), WINDOW) for c in cols]
    header = ["dialogue"]
    for n in names:
        header += [n, "%s_ma%d" % (n, WINDOW)]
    rows = [",".join(header)]
    for i in range(len(logs)):
        row = [str(i + 1)]
        for c, s in zip(cols, smoothed):
            row += ["%.6f" % c[i], "%.6f" % s[i]]
        rows.append(",".join(row))

    fixtures = os.path.join(ROOT, "fixtures")
    with open(os.path.join(fixtures, "analytics_logs.jsonl"), "w") as f:
        for l in logs:
            f.write(json.dumps(l) + "\n")
    with open(os.path.join(fixtures, "analytics_report.csv"), "w") as f:
        f.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
