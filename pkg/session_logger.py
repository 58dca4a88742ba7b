"""
WaveGAN Session Logger

Persistentes JSON-Log für jeden CLI-Lauf (Phasen, Epochen, Checkpoints).
Wird nach jedem Eintrag gespeichert - auch bei Abbruch verfügbar.
Nicht Teil des reproduzierbaren Artefakt-Manifests (enthält Zeitstempel).
"""

import os
import json
from datetime import datetime
from typing import Dict, Any, List, Optional
from dataclasses import dataclass, field, asdict


@dataclass
class RunStep:
    """Ein Abschnitt eines Laufs (Datensatz, Vortraining, Epoche, ...)"""
    timestamp: str
    phase: str
    action: str
    duration_ms: Optional[int] = None
    status: str = "started"  # started, success, error, aborted
    error: Optional[str] = None
    details: Optional[Dict[str, Any]] = None


@dataclass
class RunLog:
    """Komplettes Log eines Laufs"""
    session_id: str
    started_at: str
    command: str
    settings: Dict[str, Any]
    timeline: List[RunStep] = field(default_factory=list)
    status: str = "running"  # running, completed, aborted, error
    finished_at: Optional[str] = None
    summary: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["timeline"] = [asdict(step) for step in self.timeline]
        return data


class SessionLogger:
    """
    Logger für einen Lauf im Run-Verzeichnis.
    Speichert nach jedem Eintrag persistent als session_<id>.json.
    """

    def __init__(self, run_dir: str, command: str, settings: Dict[str, Any]):
        os.makedirs(run_dir, exist_ok=True)
        self.session_id = datetime.now().strftime("%Y%m%d_%H%M%S")
        self.log = RunLog(
            session_id=self.session_id,
            started_at=datetime.now().isoformat(),
            command=command,
            settings=settings,
        )
        self.log_path = os.path.join(run_dir, self.get_log_filename())
        self._step_starts: Dict[int, datetime] = {}
        self._save()

    def start_step(self, phase: str, action: str) -> int:
        """
        Startet einen neuen Abschnitt.
        Returns: Index des Abschnitts
        """
        now = datetime.now()
        self.log.timeline.append(RunStep(timestamp=now.isoformat(), phase=phase, action=action))
        index = len(self.log.timeline) - 1
        self._step_starts[index] = now
        self._save()
        return index

    def end_step(self, step_index: int, status: str = "success", error: Optional[str] = None,
                 details: Optional[Dict[str, Any]] = None):
        if step_index >= len(self.log.timeline):
            return
        step = self.log.timeline[step_index]
        started = self._step_starts.pop(step_index, None)
        if started:
            step.duration_ms = int((datetime.now() - started).total_seconds() * 1000)
        step.status = status
        step.error = error
        step.details = details
        self._save()

    def log_event(self, event_data: Dict[str, Any]):
        """Einzelnes Event (z.B. Epoche, Checkpoint) als abgeschlossener Eintrag."""
        self.log.timeline.append(RunStep(
            timestamp=datetime.now().isoformat(),
            phase="event",
            action=event_data.get("type", "unknown_event"),
            status="success",
            details=event_data,
        ))
        self._save()

    def complete(self, outputs: Optional[List[str]] = None, metrics: Optional[Dict[str, Any]] = None):
        """Markiert den Lauf als abgeschlossen"""
        self.log.status = "completed"
        self.log.finished_at = datetime.now().isoformat()
        started = datetime.fromisoformat(self.log.started_at)
        finished = datetime.fromisoformat(self.log.finished_at)
        self.log.summary = {
            "total_duration_ms": int((finished - started).total_seconds() * 1000),
            "steps_completed": len([s for s in self.log.timeline if s.status == "success"]),
            "steps_failed": len([s for s in self.log.timeline if s.status == "error"]),
            "outputs": outputs or [],
            "metrics": metrics or {},
        }
        self._save()

    def abort(self, reason: str = "Abgebrochen"):
        """Markiert den Lauf als abgebrochen (z.B. NaN-Abbruch)"""
        self.log.status = "aborted"
        self.log.finished_at = datetime.now().isoformat()
        for step in reversed(self.log.timeline):
            if step.status == "started":
                step.status = "aborted"
                step.error = reason
                break
        self.log.summary = {"reason": reason}
        self._save()

    def error(self, error_message: str):
        """Markiert den Lauf als fehlerhaft"""
        self.log.status = "error"
        self.log.finished_at = datetime.now().isoformat()
        if self.log.timeline:
            self.log.timeline[-1].status = "error"
            self.log.timeline[-1].error = error_message
        self._save()

    def _save(self):
        with open(self.log_path, "w", encoding="utf-8") as f:
            json.dump(self.log.to_dict(), f, ensure_ascii=False, indent=2)

    def get_log_filename(self) -> str:
        return f"session_{self.session_id}.json"


def load_run_log(path: str) -> Optional[Dict]:
    """Liest ein Session-Log; None wenn nicht vorhanden."""
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
