import os
import sys

import pytest

from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "repo", deadline=None, derandomize=True, print_blob=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")


@pytest.fixture
def workspace(tmp_path):
    """Small on-disk corpora plus an unseen-target experiment config."""
    from condstance.corpus import Instance, write_semeval_tsv
    from toyset import TOY

    train = [i for i in TOY if i.target != "Hillary Clinton"]
    test = [Instance(f"t{n}", "Hillary Clinton", tw, st) for n, (tw, st) in enumerate([
        ("Hillary for president, she has my vote", "FAVOR"),
        ("Never trust Hillary, corrupt to the core", "AGAINST"),
        ("Rain again in Seattle today", "NONE"),
        ("She will fight for working families", "FAVOR"),
    ])]
    write_semeval_tsv(train, tmp_path / "train.tsv")
    write_semeval_tsv(train[:3], tmp_path / "dev.tsv")
    write_semeval_tsv(test, tmp_path / "test.tsv")
    (tmp_path / "unlab.txt").write_text(
        "MakeAmericaGreatAgain!\n#dumptrump now\nvotetrump\nracist remarks again\n", encoding="utf-8")
    (tmp_path / "exp.ini").write_text(
        "[experiment]\nmode = unseen_target\ntrain = train.tsv\ndev = dev.tsv\ntest = test.tsv\n\n"
        "[model]\nvariant = BiCond\ninput_dim = 8\nhidden_k = 6\nmax_epochs = 3\nbatch_size = 4\n"
        "seed = 5\n\n[aliases]\nHillary Clinton = hillary\n", encoding="utf-8")
    return tmp_path
