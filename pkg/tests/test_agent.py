import json

import pytest

from spatialkit.agent import (
    AgentConfig,
    Answer,
    ChatRequest,
    ChatResponse,
    HttpChatClient,
    MockChatClient,
    RecordingChatClient,
    ScriptedChatClient,
    build_codegen_prompt,
    extract_program,
    generate_program,
    parse_choice,
    prompts,
    solve,
)
from spatialkit.bundle import save_bundle
from spatialkit.errors import (
    AuthError,
    CodegenFailureError,
    ExtractionError,
    TransportError,
)
from spatialkit.scene import Scene

MC_OPTIONS = {"A": "Diagonally forward and left", "B": "Directly right",
              "C": "Directly left", "D": "Diagonally forward and right"}

GOOD_PROGRAM = """Reasoning first.
```python
def program(input_scene: Scene):
    reconstruction = pySpatial.reconstruct(input_scene)
    motion = pySpatial.describe_camera_motion(reconstruction)
    return motion
```
"""


@pytest.fixture
def scene(small_scene, tmp_path):
    bundle, _ = small_scene
    save_bundle(bundle, tmp_path / "b")
    paths = sorted(str(p) for p in (tmp_path / "b" / "images").glob("*.png"))
    return Scene(question="which way did I move?", image_paths=paths)


@pytest.fixture
def provider(small_scene):
    bundle, _ = small_scene
    return lambda _s: bundle


# --- prompt assembly --------------------------------------------------------------

def test_prompt_contains_api_exactly_once():
    parts = build_codegen_prompt("q?", AgentConfig(example_count=4))
    joined = "\n".join(parts)
    assert joined.count(prompts.API_SPECIFICATION) == 1


def test_prompt_question_is_last():
    parts = build_codegen_prompt("where is it?", AgentConfig())
    assert parts[-1] == "Question: where is it?"


@pytest.mark.parametrize("n", [0, 2, 4])
def test_prompt_example_count(n):
    parts = build_codegen_prompt("q", AgentConfig(example_count=n))
    # task description + api spec + n examples + instructions + question
    assert len(parts) == 4 + n


def test_prompt_example_count_validated():
    with pytest.raises(ValueError):
        AgentConfig(example_count=3)


def test_prompt_examples_mention_namespace():
    for example in prompts.EXAMPLE_PROBLEMS:
        assert "pySpatial" in example
        assert "```python" in example


# --- program extraction -----------------------------------------------------------

def test_extract_program_python_fence():
    src = extract_program(GOOD_PROGRAM)
    assert src.text.startswith("def program")
    assert src.reasoning == "Reasoning first."
    assert src.origin == "agent"


def test_extract_program_untagged_fence():
    src = extract_program("```\ndef program(s):\n    return 1\n```")
    assert "return 1" in src.text


def test_extract_program_prefers_python_fence():
    text = ("```\nnot this\n```\n"
            "```python\ndef program(s):\n    return 2\n```")
    assert "return 2" in extract_program(text).text


def test_extract_program_no_fence():
    with pytest.raises(ExtractionError):
        extract_program("no code here at all")


# --- generation with retry --------------------------------------------------------

def test_generate_program_first_try(scene):
    client = ScriptedChatClient([GOOD_PROGRAM])
    source, ast, attempts = generate_program(scene, AgentConfig(), client)
    assert attempts == 1
    assert ast.func.name == "program"


def test_generate_program_repairs_with_feedback(scene):
    bad = "```python\ndef program(s):\n    import os\n```"
    client = ScriptedChatClient([bad, GOOD_PROGRAM])
    source, ast, attempts = generate_program(scene, AgentConfig(), client)
    assert attempts == 2
    # the repair prompt carries the located error text
    retry_texts = client.requests_seen[1].texts
    assert any("import" in t and "rejected" in t for t in retry_texts)


def test_generate_program_budget_exhausted(scene):
    client = ScriptedChatClient(["nope", "still nope", "nothing"])
    with pytest.raises(CodegenFailureError) as e:
        generate_program(scene, AgentConfig(retry_budget=2), client)
    assert e.value.attempts == 3
    assert e.value.stage == "program-generation"


# --- choice parsing ---------------------------------------------------------------

def test_parse_choice_standalone_letter():
    assert parse_choice("The answer is C.", MC_OPTIONS) == "C"
    assert parse_choice("D", MC_OPTIONS) == "D"


def test_parse_choice_ignores_lowercase_article():
    assert parse_choice("it moved to b i mean B", MC_OPTIONS) == "B"


def test_parse_choice_answer_is_phrase():
    text = "after thinking, answer is: b"
    # rule 1 finds no standalone uppercase token; rule 2 matches the key
    assert parse_choice(text, MC_OPTIONS) == "B"


def test_parse_choice_option_text_substring():
    text = "the camera clearly moved diagonally forward and right here"
    assert parse_choice(text, MC_OPTIONS) == "D"


def test_parse_choice_yes_no():
    assert parse_choice("Yes, it gets closer.", {"yes": "yes", "no": "no"}) == "yes"
    assert parse_choice("definitely no", {"yes": "yes", "no": "no"}) == "no"


def test_parse_choice_numeric_tail_sentence():
    assert parse_choice("I count carefully. There are 7 chairs.",
                        "numeric") == 7.0
    assert parse_choice("about 3.25 meters", "numeric") == 3.25


def test_parse_choice_free_text():
    assert parse_choice("  a free form answer \n", None) == "a free form answer"


def test_parse_choice_no_match_returns_text():
    assert parse_choice("no clue", MC_OPTIONS) == "no clue"


# --- pipeline totality ------------------------------------------------------------

def test_solve_success_path(scene, provider):
    client = ScriptedChatClient([GOOD_PROGRAM, "The answer is B."])
    outcome = solve(scene, provider, client, AgentConfig(),
                    answer_space=MC_OPTIONS)
    assert outcome.succeeded
    assert outcome.answer.choice == "B"
    assert outcome.answer.stage == "with_clue"
    assert outcome.output_kind == "text"
    assert all(v >= 0 for v in outcome.timings.values())


def test_solve_codegen_failure_falls_back(scene, provider):
    client = ScriptedChatClient(["x", "y", "z", "I guess A"])
    outcome = solve(scene, provider, client, AgentConfig(),
                    answer_space=MC_OPTIONS)
    assert outcome.failure_stage == "program-generation"
    assert outcome.answer.stage == "without_clue"
    assert outcome.answer.choice == "A"


def test_solve_execution_failure_falls_back(scene, provider):
    bad = ("```python\ndef program(s):\n"
           "    r = pySpatial.reconstruct(s)\n"
           "    return r.extrinsics[99]\n```")
    client = ScriptedChatClient([bad, "fallback: C"])
    outcome = solve(scene, provider, client, AgentConfig(),
                    answer_space=MC_OPTIONS)
    assert outcome.failure_stage == "execution"
    assert outcome.answer.choice == "C"


def test_solve_reconstruction_failure(scene):
    from spatialkit.errors import BackendFailureError

    def broken(_s):
        raise BackendFailureError("backend down")

    client = ScriptedChatClient([GOOD_PROGRAM, "fallback: D"])
    outcome = solve(scene, broken, client, AgentConfig(),
                    answer_space=MC_OPTIONS)
    assert outcome.failure_stage == "reconstruction"
    assert outcome.answer.choice == "D"


def test_solve_answer_failure(scene, provider):
    client = ScriptedChatClient([
        GOOD_PROGRAM,
        TransportError("chat down"),
        "recovered: B",
    ])
    outcome = solve(scene, provider, client, AgentConfig(),
                    answer_space=MC_OPTIONS)
    assert outcome.failure_stage == "answer"
    assert outcome.answer.choice == "B"
    assert outcome.answer.stage == "without_clue"


def test_solve_total_even_when_everything_fails(scene, provider):
    client = ScriptedChatClient([TransportError("down")] * 5)
    outcome = solve(scene, provider, client, AgentConfig(),
                    answer_space=MC_OPTIONS)
    assert isinstance(outcome.answer, Answer)
    assert outcome.failure_stage == "program-generation"


# --- clients ----------------------------------------------------------------------

def test_request_digest_stable_and_sensitive():
    r1 = ChatRequest(model="m", system="", texts=("a", "b"), images=(b"x",))
    r2 = ChatRequest(model="m", system="", texts=("a", "b"), images=(b"x",))
    r3 = ChatRequest(model="m", system="", texts=("a", "c"), images=(b"x",))
    r4 = ChatRequest(model="m", system="", texts=("a", "b"), images=(b"y",))
    assert r1.digest() == r2.digest()
    assert r1.digest() != r3.digest()
    assert r1.digest() != r4.digest()


def test_mock_client_round_trip(tmp_path):
    req = ChatRequest(model="m", system="", texts=("hello",), images=())
    inner = ScriptedChatClient(["world"])
    rec = RecordingChatClient(inner, tmp_path / "fx.jsonl")
    assert rec.send(req).text == "world"
    mock = MockChatClient(tmp_path / "fx.jsonl")
    assert mock.send(req).text == "world"
    other = ChatRequest(model="m", system="", texts=("bye",), images=())
    with pytest.raises(TransportError):
        mock.send(other)


def test_image_limit_enforced():
    client = ScriptedChatClient(["x"])
    req = ChatRequest(model="m", system="", texts=("t",),
                      images=tuple(b"i" for _ in range(33)))
    with pytest.raises(ValueError):
        client.send(req)


class _FakeResponse:
    def __init__(self, status, payload=None):
        self.status_code = status
        self._payload = payload or {}

    def json(self):
        return self._payload


def _ok_payload(text):
    return {"choices": [{"message": {"content": text}}],
            "usage": {"prompt_tokens": 1, "completion_tokens": 2}}


def test_http_client_backoff_then_success(monkeypatch):
    calls = []
    sleeps = []
    responses = [_FakeResponse(429), _FakeResponse(500),
                 _FakeResponse(200, _ok_payload("hi"))]

    def fake_post(url, **kwargs):
        calls.append(url)
        return responses[len(calls) - 1]

    import requests

    monkeypatch.setattr(requests, "post", fake_post)
    client = HttpChatClient(base_url="http://x", api_key="k",
                            sleep=sleeps.append)
    resp = client.send(ChatRequest(model="m", system="", texts=("t",),
                                   images=()))
    assert resp.text == "hi"
    assert sleeps == [1.0, 2.0]


def test_http_client_auth_error_no_retry(monkeypatch):
    calls = []

    def fake_post(url, **kwargs):
        calls.append(url)
        return _FakeResponse(401)

    import requests

    monkeypatch.setattr(requests, "post", fake_post)
    client = HttpChatClient(base_url="http://x", api_key="bad",
                            sleep=lambda s: None)
    with pytest.raises(AuthError):
        client.send(ChatRequest(model="m", system="", texts=("t",), images=()))
    assert len(calls) == 1


def test_http_client_exhausts_retries(monkeypatch):
    def fake_post(url, **kwargs):
        return _FakeResponse(503)

    import requests

    monkeypatch.setattr(requests, "post", fake_post)
    client = HttpChatClient(base_url="http://x", sleep=lambda s: None)
    with pytest.raises(TransportError) as e:
        client.send(ChatRequest(model="m", system="", texts=("t",), images=()))
    assert e.value.last_status == 503


def test_http_client_env_overrides(monkeypatch):
    monkeypatch.setenv("SPATIALKIT_BASE_URL", "http://env")
    monkeypatch.setenv("SPATIALKIT_API_KEY", "env-key")
    client = HttpChatClient(base_url="http://arg", api_key="arg-key")
    assert client.base_url == "http://env"
    assert client.api_key == "env-key"


def test_http_client_requires_base_url(monkeypatch):
    monkeypatch.delenv("SPATIALKIT_BASE_URL", raising=False)
    with pytest.raises(ValueError):
        HttpChatClient()
