from rtlfl.harness.evaluate import EvalRecord, evaluate_topn, make_record
from rtlfl.harness.manifest import ProjectManifest, load_manifest
from rtlfl.harness.mutate import RULES, Mutation, inject_mutation
from rtlfl.harness.project import Project, load_stimulus

__all__ = [
    "RULES",
    "EvalRecord",
    "Mutation",
    "Project",
    "ProjectManifest",
    "evaluate_topn",
    "inject_mutation",
    "load_manifest",
    "load_stimulus",
    "make_record",
]
