import pytest

from goldset.model import (
    ContentItem,
    PolicyVersion,
    GoldLabel,
    AgentDecision,
    validate_decision,
)
from goldset.errors import UnknownLabel, PolicyMismatch, MalformedItem, BadConfig


POLICY = PolicyVersion(policy_id="adult", version=1)


def make_item(item_id="a", code=3, dim=4):
    return ContentItem(item_id=item_id, embedding=(0.0,) * dim, code=code)


def make_decision(label="positive", policy_version=1):
    return AgentDecision(
        agent_id="agent-1",
        run_id="run-0",
        item_id="a",
        policy_id="adult",
        policy_version=policy_version,
        label=label,
    )


class TestValidateDecision:
    def test_valid_label_passes_through(self):
        d = make_decision("positive")
        assert validate_decision(d, POLICY) is d

    def test_unknown_label(self):
        with pytest.raises(UnknownLabel):
            validate_decision(make_decision("maybe"), POLICY)

    def test_policy_version_mismatch(self):
        with pytest.raises(PolicyMismatch):
            validate_decision(make_decision(policy_version=2), POLICY)


class TestItemValidation:
    def test_code_out_of_range(self):
        with pytest.raises(MalformedItem):
            make_item(code=300).validate()

    def test_wrong_embedding_length(self):
        with pytest.raises(MalformedItem):
            make_item(dim=3).validate(dim=4)

    def test_non_finite_embedding(self):
        item = ContentItem(item_id="x", embedding=(0.0, float("nan")), code=0)
        with pytest.raises(MalformedItem):
            item.validate()


class TestPolicyVersion:
    def test_needs_two_distinct_labels(self):
        with pytest.raises(BadConfig):
            PolicyVersion(policy_id="p", version=1, label_set=("only",))
        with pytest.raises(BadConfig):
            PolicyVersion(policy_id="p", version=1, label_set=("dup", "dup"))

    def test_positive_is_first_label(self):
        assert POLICY.positive_label == "positive"


class TestSerializationRoundTrip:
    def test_content_item(self):
        item = make_item()
        assert ContentItem.from_dict(item.to_dict()) == item

    def test_policy_version(self):
        assert PolicyVersion.from_dict(POLICY.to_dict()) == POLICY

    def test_gold_label(self):
        g = GoldLabel(item_id="a", policy_id="adult", policy_version=1,
                      label="positive", sme_id="sme-1", adjudicated=True)
        assert GoldLabel.from_dict(g.to_dict()) == g

    def test_agent_decision(self):
        d = make_decision()
        assert AgentDecision.from_dict(d.to_dict()) == d


class TestGoldLabel:
    def test_label_must_be_in_policy_set(self):
        g = GoldLabel(item_id="a", policy_id="adult", policy_version=1, label="weird")
        with pytest.raises(UnknownLabel):
            g.validate(POLICY)
