"""
语料清单读写

语料目录包含三张表：
- runners.csv  (runner_id, age_range, sex)
- sessions.csv (session_id, runner_id, audio_path)
- events.csv   (session_id, time_s, fatigue, wellbeing, surface)
"""

import logging
from collections import defaultdict
from pathlib import Path

from pydantic import BaseModel, ValidationError

from dataset.tables import line_of, read_table, write_table
from dataset.types import AnswerEvent, RunnerProfile, SessionManifest
from errors import ParseError, RangeViolation, UnknownRunner


logger = logging.getLogger(__name__)

RUNNERS_FILE = "runners.csv"
SESSIONS_FILE = "sessions.csv"
EVENTS_FILE = "events.csv"

RUNNER_COLUMNS = ["runner_id", "age_range", "sex"]
SESSION_COLUMNS = ["session_id", "runner_id", "audio_path"]
EVENT_COLUMNS = ["session_id", "time_s", "fatigue", "wellbeing", "surface"]

# pydantic 中表示数值越界的错误类型
_RANGE_ERRORS = {"greater_than", "greater_than_equal", "less_than", "less_than_equal"}


def _validate_row(model: type[BaseModel], row: dict, path: Path, line: int) -> BaseModel:
    """用 pydantic 校验一行，并把错误转换为带行号的 ParseError / RangeViolation"""
    try:
        return model(**row)
    except ValidationError as e:
        first = e.errors()[0]
        field = str(first["loc"][0]) if first["loc"] else None
        error_cls = RangeViolation if first["type"] in _RANGE_ERRORS else ParseError
        raise error_cls(first["msg"], path=str(path), line=line, field=field) from e


def load_manifest(path: str | Path) -> tuple[list[SessionManifest], list[RunnerProfile]]:
    """
    加载并校验语料清单

    Args:
        path: 语料目录

    Returns:
        (会话列表, 跑者档案列表)
    """
    corpus = Path(path)
    runners_path = corpus / RUNNERS_FILE
    sessions_path = corpus / SESSIONS_FILE
    events_path = corpus / EVENTS_FILE

    # 1. 跑者档案
    profiles: dict[str, RunnerProfile] = {}
    for index, row in read_table(runners_path, RUNNER_COLUMNS).iterrows():
        record = {k: row[k].strip() for k in RUNNER_COLUMNS}
        profile = _validate_row(RunnerProfile, record, runners_path, line_of(index))
        if profile.runner_id in profiles:
            raise ParseError("跑者编号重复", path=str(runners_path),
                             line=line_of(index), field="runner_id")
        profiles[profile.runner_id] = profile

    # 2. 回答事件（按会话分组）
    events: dict[str, list[tuple[int, AnswerEvent]]] = defaultdict(list)
    for index, row in read_table(events_path, EVENT_COLUMNS).iterrows():
        record = {
            "time_s": row["time_s"].strip(),
            "fatigue": row["fatigue"].strip(),
            "wellbeing": row["wellbeing"].strip(),
            "surface": row["surface"],
        }
        event = _validate_row(AnswerEvent, record, events_path, line_of(index))
        events[row["session_id"].strip()].append((line_of(index), event))

    # 3. 会话
    sessions: list[SessionManifest] = []
    seen: set[str] = set()
    for index, row in read_table(sessions_path, SESSION_COLUMNS).iterrows():
        session_id = row["session_id"].strip()
        runner_id = row["runner_id"].strip()
        if session_id in seen:
            raise ParseError("会话编号重复", path=str(sessions_path),
                             line=line_of(index), field="session_id")
        if runner_id not in profiles:
            raise UnknownRunner(f"{sessions_path}:{line_of(index)}: 未知跑者 {runner_id!r}")
        seen.add(session_id)

        ordered = sorted(events.get(session_id, []), key=lambda item: item[1].time_s)
        for (_, previous), (line, current) in zip(ordered, ordered[1:]):
            if current.time_s <= previous.time_s:
                raise ParseError("同一会话中回答时间重复", path=str(events_path),
                                 line=line, field="time_s")

        sessions.append(SessionManifest(
            session_id=session_id,
            runner_id=runner_id,
            audio_path=row["audio_path"].strip(),
            events=tuple(event for _, event in ordered),
        ))

    orphans = sorted(set(events) - seen)
    if orphans:
        line = events[orphans[0]][0][0]
        raise ParseError(f"事件引用了未知会话 {orphans[0]!r}", path=str(events_path),
                         line=line, field="session_id")

    logger.info(f"清单加载完成: {len(profiles)} 名跑者, {len(sessions)} 个会话, "
                f"{sum(len(s.events) for s in sessions)} 个回答事件")
    return sessions, list(profiles.values())


def write_manifest(
    path: str | Path,
    sessions: list[SessionManifest],
    profiles: list[RunnerProfile],
) -> None:
    """
    写出语料清单

    Args:
        path: 语料目录
        sessions: 会话列表
        profiles: 跑者档案列表
    """
    corpus = Path(path)
    write_table(corpus / RUNNERS_FILE, [p.model_dump() for p in profiles], RUNNER_COLUMNS)
    write_table(
        corpus / SESSIONS_FILE,
        [{"session_id": s.session_id, "runner_id": s.runner_id, "audio_path": s.audio_path}
         for s in sessions],
        SESSION_COLUMNS,
    )
    write_table(
        corpus / EVENTS_FILE,
        [{"session_id": s.session_id, **e.model_dump()} for s in sessions for e in s.events],
        EVENT_COLUMNS,
    )
