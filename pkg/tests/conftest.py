import pytest

from lexbias.types import Instance, Label, Segment, TaskKind


def bracketed(text: str) -> Segment:
    """Build a Segment from text with the target in [brackets]."""
    start = text.index("[")
    end = text.index("]") - 1
    stripped = text.replace("[", "", 1).replace("]", "", 1)
    return Segment(stripped, start, end, stripped[start:end])


def pair(iid: str, word_key: str, text1: str, text2: str, gold: str) -> Instance:
    return Instance(
        id=iid,
        task_kind=TaskKind.PAIR_CLASSIFICATION,
        segments=(bracketed(text1), bracketed(text2)),
        gold=Label.binary(gold),
        word_key=word_key,
    )


def single(iid: str, word_key: str, text: str, gold_id: str,
           candidates=None, kind=TaskKind.RETRIEVAL) -> Instance:
    return Instance(
        id=iid,
        task_kind=kind,
        segments=(bracketed(text),),
        gold=Label.candidate(gold_id),
        candidates=tuple(candidates) if candidates else None,
        word_key=word_key,
    )


@pytest.fixture
def breed_pair() -> Instance:
    return pair(
        "wic-breed", "breed",
        "Google represents a new [breed] of entrepreneurs .",
        "The [breed] of tulip .",
        "F",
    )


@pytest.fixture
def kill_pair() -> Instance:
    return pair(
        "wic-kill", "kill",
        "[Kill] the engine .",
        "He [kills] the ball .",
        "F",
    )


@pytest.fixture
def apollo_pair() -> Instance:
    return pair(
        "amico-apollo", "apollo",
        "航天员训练及[阿波罗]中飞船指令长 .",
        "... the six [Apollo] Moon landings .",
        "T",
    )


@pytest.fixture
def sweat_bees() -> Instance:
    return single(
        "wikimed-bees", "sweat bees",
        "Various bees and flies visit the flowers , for instance [sweat bees] in the genera .",
        "halictidae",
    )
