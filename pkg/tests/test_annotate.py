"""Knowledge-point extraction, main-idea summarizing, and point selection."""

import json
import random
from collections import Counter

import pytest

from dynbench import InvalidArg, UnparseableResponse
from dynbench.annotate import (
    annotate_item,
    extract_knowledge_points,
    extract_main_idea,
    parse_bracketed_list,
    select_knowledge_points,
)

from helpers import make_items, scripted_client, seq_client


class TestParseBracketedList:
    def test_plain_json_list(self):
        assert parse_bracketed_list('["a", "b"]') == ["a", "b"]

    def test_prose_around_the_list(self):
        text = 'Sure! Here are the points:\n["one", "two"]\nHope that helps.'
        assert parse_bracketed_list(text) == ["one", "two"]

    def test_smart_quotes_normalized(self):
        assert parse_bracketed_list("[“alpha”, “beta”]") == ["alpha", "beta"]

    def test_duplicates_and_blanks_dropped(self):
        assert parse_bracketed_list('["a", "", "a", "  b "]') == ["a", "b"]

    def test_no_list_found(self):
        with pytest.raises(UnparseableResponse):
            parse_bracketed_list("no list here")

    def test_invalid_json_inside_brackets(self):
        with pytest.raises(UnparseableResponse):
            parse_bracketed_list("[a, b]")

    def test_non_string_entries(self):
        with pytest.raises(UnparseableResponse):
            parse_bracketed_list("[1, 2]")

    def test_all_blank_entries(self):
        with pytest.raises(UnparseableResponse):
            parse_bracketed_list('["", "  "]')


class TestSelectKnowledgePoints:
    def test_returns_all_when_k_covers(self):
        assert select_knowledge_points(["a", "b"], 2, random.Random(0)) == ["a", "b"]
        assert select_knowledge_points(["a"], 3, random.Random(0)) == ["a"]

    def test_original_order_preserved(self):
        points = ["p0", "p1", "p2", "p3"]
        for seed in range(50):
            picked = select_knowledge_points(points, 2, random.Random(seed))
            assert picked == sorted(picked, key=points.index)

    def test_uniform_without_replacement(self):
        """Each of 4 points lands in a 2-pick with frequency ~1/2."""
        points = ["p0", "p1", "p2", "p3"]
        rng = random.Random(12345)
        counts = Counter()
        draws = 10_000
        for _ in range(draws):
            counts.update(select_knowledge_points(points, 2, rng))
        for p in points:
            assert abs(counts[p] / draws - 0.5) < 0.02, counts

    def test_pair_frequencies_uniform(self):
        points = ["p0", "p1", "p2", "p3"]
        rng = random.Random(99)
        pairs = Counter()
        draws = 12_000
        for _ in range(draws):
            pairs[tuple(select_knowledge_points(points, 2, rng))] += 1
        assert len(pairs) == 6
        for pair, n in pairs.items():
            assert abs(n / draws - 1 / 6) < 0.02, pairs

    def test_validation(self):
        with pytest.raises(InvalidArg):
            select_knowledge_points(["a"], 0, random.Random(0))
        with pytest.raises(InvalidArg):
            select_knowledge_points([], 1, random.Random(0))


class TestExtraction:
    def test_extract_knowledge_points_happy(self):
        item = make_items(1)[0]
        client = scripted_client(lambda r: '["alpha", "beta", "gamma"]')
        assert extract_knowledge_points(item, client) == ["alpha", "beta", "gamma"]

    def test_retry_then_success(self):
        item = make_items(1)[0]
        client = seq_client(["not a list", '["alpha"]'])
        assert extract_knowledge_points(item, client, retries=1) == ["alpha"]

    def test_retries_exhausted(self):
        item = make_items(1)[0]
        client = scripted_client(lambda r: "never a list")
        with pytest.raises(UnparseableResponse) as err:
            extract_knowledge_points(item, client, retries=2)
        assert item.id in str(err.value)

    def test_retry_reuses_identical_prompt(self):
        item = make_items(1)[0]
        from dynbench import ScriptedProvider, ChatClient
        from dynbench.provider.scripted import sequence_responder

        provider = ScriptedProvider(sequence_responder(["nope", '["a"]']))
        client = ChatClient(provider=provider, model="m")
        extract_knowledge_points(item, client, retries=1)
        prompts = [r.messages[-1].content for r in provider.requests]
        assert len(prompts) == 2 and prompts[0] == prompts[1]

    def test_main_idea_takes_first_paragraph(self):
        item = make_items(1)[0]
        client = scripted_client(lambda r: "The main idea.\n\nExtra paragraph.")
        assert extract_main_idea(item, client) == "The main idea."

    def test_main_idea_retries_on_blank(self):
        item = make_items(1)[0]
        client = seq_client(["   ", "The idea."])
        assert extract_main_idea(item, client, retries=1) == "The idea."

    def test_main_idea_blank_exhausts(self):
        item = make_items(1)[0]
        client = scripted_client(lambda r: "")
        with pytest.raises(UnparseableResponse):
            extract_main_idea(item, client, retries=1)


class TestAnnotateItem:
    def _responder(self, request):
        prompt = request.messages[0].content
        if "summarizing knowledge points" in prompt:
            return json.dumps(["alpha", "beta", "gamma", "delta"])
        return "A single-line summary of the item."

    def test_full_annotation(self):
        item = make_items(1)[0]
        ann = annotate_item(
            item, scripted_client(self._responder), k_num=2, rng=random.Random(7)
        )
        assert ann.item_id == item.id
        assert ann.knowledge_points == ("alpha", "beta", "gamma", "delta")
        assert len(ann.selected_points) == 2
        assert set(ann.selected_points) <= set(ann.knowledge_points)
        assert ann.main_idea == "A single-line summary of the item."

    def test_same_rng_same_selection(self):
        item = make_items(1)[0]
        a = annotate_item(
            item, scripted_client(self._responder), k_num=2, rng=random.Random(42)
        )
        b = annotate_item(
            item, scripted_client(self._responder), k_num=2, rng=random.Random(42)
        )
        assert a == b
