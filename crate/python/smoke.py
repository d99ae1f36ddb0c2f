"""Exercises the Python bindings end to end. Exits non-zero on the first failure."""

import json
import sys
import tempfile

import reasonchat_py as rc

ADDRESS = "621 W Plano Pkwy #229, Plano, TX 75075"
LINES = [
    "Can you recommend me a restaurant?",
    "I can try any food except curry.",
    "Less than fifteen dollars.",
    "No, I'm not looking for a specific rating score.",
    "Sounds nice. Can you give me its address?",
    "Thank you for your help.",
]


def check(cond, what):
    if not cond:
        print(f"FAIL {what}")
        sys.exit(1)
    print(f"ok   {what}")


def grammar():
    text = "require('name',['query']), require('establishment',['restaurant'])"
    parsed = rc.parse(text)
    check(parsed[0] == ("require", ["name", ["query"]]), "parse gives (functor, args)")
    check(rc.serialize(parsed) == "require('name',['query']),\nrequire('establishment',['restaurant'])", "serialize inverts parse")
    check(rc.serialize(rc.parse("talk(movie, Inception, plot episode). attitude(positive)."), "companion")
          == "talk(movie,Inception,plot episode). attitude(positive).", "companion style")
    try:
        rc.parse("require('price range',")
        check(False, "syntax error raised")
    except ValueError:
        check(True, "syntax error raised")


def ontology():
    onto = rc.Ontology.bundled("concierge")
    check(onto.full_domain("price range") == ["cheap", "moderate", "expensive"], "closed domain")
    verdicts = [v for _, v, _ in onto.validate("require('price range',['cheap']), require('colour',['red']), fly(away)")]
    check(verdicts == ["OK", "UNKNOWN_SLOT", "UNKNOWN_FUNCTOR"], "validation verdicts")


def concierge():
    engine = rc.Engine()
    info = engine.create_session("concierge", seed=1)
    kinds = [engine.post_message(info["id"], line)["action_kind"] for line in LINES]
    check(kinds == ["ask_slot", "ask_slot", "ask_slot", "recommend", "answer_query", "farewell"], "concierge action sequence")
    transcript = engine.transcript(info["id"])
    check(any(ADDRESS in t["text"] for t in transcript), "address answered")
    try:
        engine.post_message(info["id"], "hello?")
        check(False, "closed session refuses input")
    except rc.StateClosed:
        check(True, "closed session refuses input")
    check(engine.search("require('food type',['American']), require('price range',['cheap'])")[0] == "Southern Recipes Grill",
          "knowledge base search")


def companion():
    a, b = rc.Engine(), rc.Engine()
    first = a.create_session("companion", seed=7)
    second = b.create_session("companion", seed=7)
    check(first["next"] == second["next"] and first["digest"] == second["digest"], "seeded opening is reproducible")
    turn = a.post_predicates(first["id"], "talk(movie, Inception, plot episode). attitude(negative).")
    check(turn["action"].endswith("attitude(negative)."), "attitude echoed")
    check(("acted_in", "Leonardo DiCaprio") in a.neighbors("Inception"), "graph neighbors")
    try:
        a.create_session("weather")
        check(False, "bad task rejected")
    except rc.BadTask:
        check(True, "bad task rejected")


def crash_replay():
    with tempfile.TemporaryDirectory() as logs:
        engine = rc.Engine(log_dir=logs)
        sid = engine.create_session("concierge", seed=3)["id"]
        for line in LINES[:3]:
            engine.post_message(sid, line)
        before = engine.digest(sid)
        del engine
        restored = rc.Engine(log_dir=logs)
        check(restored.recover() == 1, "session restored from log")
        check(restored.digest(sid) == before, "digest survives restart")
        state = restored.state(sid)
        check(state["missing"] == ["customer rating"], "state view: " + json.dumps(state["missing"]))


if __name__ == "__main__":
    grammar()
    ontology()
    concierge()
    companion()
    crash_replay()
    print("smoke test passed")
