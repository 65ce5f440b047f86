"""Least-loaded agent assignment and per-agent performance analytics."""
import logging
from dataclasses import replace
from typing import Iterable, List, Optional

from core.exceptions import ConfigError, NoAgentForRoleError
from core.model import AgentProfile, AgentRole, Task

logger = logging.getLogger(__name__)


def assign(task: Task, pool: Iterable[AgentProfile]) -> Optional[str]:
    """
    Picks the agent for `task`: among agents of the task's role with spare
    capacity, the one minimizing (in_flight, ema_latency_ms, agent_id).
    Returns None when every matching agent is busy; the task then waits.

    Raises:
        NoAgentForRoleError: the pool has no agent of the task's role at all.
    """
    matching = [p for p in pool if p.role == task.role]
    if not matching:
        raise NoAgentForRoleError(task.role.value)
    available = [p for p in matching if p.has_capacity]
    if not available:
        return None
    best = min(available, key=lambda p: (p.in_flight, p.ema_latency_ms, p.agent_id))
    return best.agent_id


def update_analytics(profile: AgentProfile, latency_ms: float, succeeded: bool, alpha: float) -> AgentProfile:
    """
    Folds one observation into the agent's analytics. The first observation
    sets the latency EMA directly; later ones use alpha * obs + (1 - alpha) * ema.
    """
    if latency_ms < 0:
        raise ValueError(f"latency_ms must be non-negative, got {latency_ms}.")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}.")
    if profile.completed == 0:
        ema = float(latency_ms)
    else:
        ema = alpha * latency_ms + (1 - alpha) * profile.ema_latency_ms
    completed = profile.completed + 1
    successes = profile.successes + (1 if succeeded else 0)
    return replace(profile, ema_latency_ms=ema, completed=completed, successes=successes,
                   success_rate=successes / max(1, completed))


def parse_agent_pool(text: str) -> List[AgentProfile]:
    """
    Parses 'agent_id:Role:capacity' entries separated by commas, e.g.
    'pfc:Prefrontal:1,mot1:Motor:2'. Capacity defaults to 1 when omitted.

    Raises:
        ConfigError: malformed entry, unknown role, bad capacity or duplicate id.
    """
    pool: List[AgentProfile] = []
    seen = set()
    for raw in (text or "").split(","):
        entry = raw.strip()
        if not entry:
            continue
        parts = [p.strip() for p in entry.split(":")]
        if len(parts) not in (2, 3) or not parts[0]:
            raise ConfigError(f"Invalid agent pool entry '{entry}'. Use 'agent_id:Role:capacity'.")
        try:
            role = AgentRole(parts[1])
        except ValueError:
            raise ConfigError(f"Unknown role '{parts[1]}' in agent pool entry '{entry}'.")
        try:
            capacity = int(parts[2]) if len(parts) == 3 else 1
            profile = AgentProfile(agent_id=parts[0], role=role, capacity=capacity)
        except ValueError as e:
            raise ConfigError(f"Invalid agent pool entry '{entry}': {e}")
        if profile.agent_id in seen:
            raise ConfigError(f"Duplicate agent id '{profile.agent_id}' in agent pool.")
        seen.add(profile.agent_id)
        pool.append(profile)
    if not pool:
        raise ConfigError("The agent pool is empty.")
    return pool
