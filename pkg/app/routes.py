from flask import Blueprint, Response, jsonify, request
import logging

from . import db
from .models import SimulationRun
from .services import RangingService, SimulationService

logger = logging.getLogger(__name__)

main = Blueprint('main', __name__)

MAX_RUNS_LISTED = 50


@main.route('/health')
def health():
    return jsonify({'status': 'ok'})


@main.route('/simulate', methods=['POST'])
def simulate():
    """Validate a config body, run it and return the stored run"""
    service = SimulationService(db)
    parsed = service.build_config(request.get_json(silent=True))
    if parsed['status'] == 'error':
        return jsonify({'error': parsed['error'], 'key': parsed['key']}), 400

    result = service.simulate(parsed['config'])
    if result['status'] == 'error':
        return jsonify({'error': result['error'], 'run': result['run']}), 500
    return jsonify(result['run']), 201


@main.route('/runs')
def list_runs():
    try:
        limit = min(int(request.args.get('limit', MAX_RUNS_LISTED)), MAX_RUNS_LISTED)
    except ValueError:
        return jsonify({'error': 'limit must be an integer'}), 400
    runs = SimulationRun.query.order_by(SimulationRun.created_date.desc(), SimulationRun.id.desc()) \
        .limit(limit).all()
    return jsonify({'runs': [run.to_dict() for run in runs]})


@main.route('/runs/<int:run_id>')
def get_run(run_id):
    run = db.session.get(SimulationRun, run_id)
    if not run:
        return jsonify({'error': 'Run not found'}), 404
    payload = run.to_dict()
    payload['config'] = run.config
    return jsonify(payload)


@main.route('/runs/<int:run_id>', methods=['DELETE'])
def delete_run(run_id):
    try:
        run = db.session.get(SimulationRun, run_id)
        if not run:
            return jsonify({'success': False, 'error': 'Run not found'}), 404
        db.session.delete(run)
        db.session.commit()
        logger.info(f"Deleted simulation run {run_id}")
        return jsonify({'success': True})
    except Exception as e:
        db.session.rollback()
        logger.error(f"Error deleting run {run_id}: {e}")
        return jsonify({'success': False, 'error': str(e)}), 500


@main.route('/runs/<int:run_id>/events')
def run_events(run_id):
    run = db.session.get(SimulationRun, run_id)
    if not run:
        return jsonify({'error': 'Run not found'}), 404
    return Response((run.event_log or '') + '\n', mimetype='text/plain')


@main.route('/isac/range', methods=['POST'])
def isac_range():
    """One ranging exchange at the requested distance"""
    body = request.get_json(silent=True) or {}
    if 'distance' not in body:
        return jsonify({'error': 'distance is required'}), 400

    result = RangingService().range(body['distance'], body.get('snr_db'), body.get('noise_seed'))
    if result['status'] == 'error':
        return jsonify({'error': result['error']}), 400
    return jsonify(result)
