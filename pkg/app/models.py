import json
from datetime import datetime
from . import db


class SimulationRun(db.Model):
    """One stored simulation run: its configuration, metrics and event log."""
    id = db.Column(db.Integer, primary_key=True)
    scheduler = db.Column(db.String(20), nullable=False)  # 'poised', 'nearest' or 'fcfs'
    node_count = db.Column(db.Integer, nullable=False)
    mcv_count = db.Column(db.Integer, nullable=False)
    seed = db.Column(db.Integer, nullable=False)
    horizon = db.Column(db.Float, nullable=False)  # Simulated seconds
    isac = db.Column(db.Boolean, default=True)
    created_date = db.Column(db.DateTime, default=datetime.utcnow, index=True)

    # Metrics
    energy_usage_efficiency = db.Column(db.Float)
    efficiency_defined = db.Column(db.Boolean)
    mean_charging_delay = db.Column(db.Float)
    survival_rate = db.Column(db.Float)
    travel_distance_total = db.Column(db.Float)
    requests_emitted = db.Column(db.Integer)
    requests_served = db.Column(db.Integer)
    duplicate_services = db.Column(db.Integer)

    # Processing status
    status = db.Column(db.String(50), default='pending')  # pending, completed, error
    error_message = db.Column(db.Text)
    config_json = db.Column(db.Text)  # Full SimulationConfig as JSON
    event_log = db.Column(db.Text)  # One `time kind key=value...` record per line

    def __init__(self, scheduler, node_count, mcv_count, seed, horizon, isac=True, config=None):
        self.scheduler = scheduler
        self.node_count = node_count
        self.mcv_count = mcv_count
        self.seed = seed
        self.horizon = horizon
        self.isac = isac
        self.config_json = json.dumps(config) if config is not None else None
        self.status = 'pending'

    @property
    def config(self):
        return json.loads(self.config_json) if self.config_json else {}

    def to_dict(self):
        """Convert run record to dictionary for API responses."""
        return {
            'id': self.id,
            'scheduler': self.scheduler,
            'node_count': self.node_count,
            'mcv_count': self.mcv_count,
            'seed': self.seed,
            'horizon': self.horizon,
            'isac': self.isac,
            'created_date': self.created_date.isoformat() if self.created_date else None,
            'status': self.status,
            'error_message': self.error_message,
            'metrics': {
                'energy_usage_efficiency': self.energy_usage_efficiency,
                'efficiency_defined': self.efficiency_defined,
                'mean_charging_delay': self.mean_charging_delay,
                'survival_rate': self.survival_rate,
                'travel_distance_total': self.travel_distance_total,
                'requests_emitted': self.requests_emitted,
                'requests_served': self.requests_served,
                'duplicate_services': self.duplicate_services,
            },
            'event_count': len(self.event_log.splitlines()) if self.event_log else 0,
        }

    def __repr__(self):
        return f'<SimulationRun {self.id} {self.scheduler} n={self.node_count} seed={self.seed}>'
