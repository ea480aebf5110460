"""Exception hierarchy shared across the package.

Every error carries a stable machine-readable ``code`` so the CLI and the
HTTP service can map failures to JSON error bodies without string matching.
"""


class GoldsetError(Exception):
    code = "error"

    def __init__(self, message=""):
        super().__init__(message or self.code)

    @property
    def message(self):
        return str(self)


class UnknownLabel(GoldsetError):
    code = "unknown_label"


class PolicyMismatch(GoldsetError):
    code = "policy_mismatch"


class PolicyImmutable(GoldsetError):
    code = "policy_immutable"


class MalformedItem(GoldsetError):
    code = "malformed_item"


class UnknownItem(GoldsetError):
    code = "unknown_item"


class EmptyPublish(GoldsetError):
    code = "empty_publish"


class NotFound(GoldsetError):
    code = "not_found"


class CorruptVersion(GoldsetError):
    code = "corrupt_version"


class NotAncestor(GoldsetError):
    code = "not_ancestor"


class NonBinaryPolicy(GoldsetError):
    code = "non_binary_policy"


class EmptyOverlap(GoldsetError):
    code = "empty_overlap"


class LengthMismatch(GoldsetError):
    code = "length_mismatch"


class NotNormalized(GoldsetError):
    code = "not_normalized"


class UnknownMetric(GoldsetError):
    code = "unknown_metric"


class SingleClass(GoldsetError):
    code = "single_class"


class EmptyCandidates(GoldsetError):
    code = "empty_candidates"


class TooFewSamples(GoldsetError):
    code = "too_few_samples"


class BadConfig(GoldsetError):
    code = "bad_config"


class Misaligned(GoldsetError):
    code = "misaligned"


class SamePolicyVersion(GoldsetError):
    code = "same_policy_version"


class DifferentPolicyFamily(GoldsetError):
    code = "different_policy_family"
