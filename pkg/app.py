"""
JSON HTTP API over the toolkit operations.

Run locally with `python app.py`, in production with
`gunicorn -c gunicorn.conf.py app:app`.
"""
import logging
import os
import sys
import traceback
from datetime import datetime
from enum import Enum
from pathlib import Path

import numpy as np
from flask import Flask, jsonify, request, send_from_directory
from flask.json.provider import DefaultJSONProvider
from flask_cors import CORS
from werkzeug.utils import secure_filename

import cli
from caselib import exp_constant, poly_constant
from config import (DEFAULT_MAX_ITER, DEFAULT_STEPS, DEFAULT_TOL, FIG3_SEED, FIG_M, LOG_FORMAT, LOG_LEVEL,
                    OUTPUT_DIR, Experiment, ExperimentConfig, Family)
from errors import FixedPointError
from export import to_jsonable

# Configure logging
logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
logger = logging.getLogger(__name__)


class CustomJSONProvider(DefaultJSONProvider):
    """JSON provider that understands Enums, numpy values and result dataclasses"""

    def default(self, obj):
        if isinstance(obj, Enum):
            return obj.value
        elif isinstance(obj, datetime):
            return obj.isoformat()
        elif isinstance(obj, (np.ndarray, np.generic, Path)) or hasattr(obj, 'to_dict') or hasattr(obj, '__dict__'):
            return to_jsonable(obj)
        return super().default(obj)


app = Flask(__name__)
app.json = CustomJSONProvider(app)
CORS(app)

app.config['OUTPUT_DIR'] = Path(OUTPUT_DIR)


def handle_error(e):
    """Unified error handling: 400 for rejected input, 500 for anything else"""
    if isinstance(e, (FixedPointError, ValueError, KeyError, TypeError)):
        logger.warning(f"API rejected request: {e}")
        return jsonify({'success': False, 'message': str(e)}), 400
    logger.error(f"API error: {e}")
    logger.error(traceback.format_exc())
    return jsonify({'success': False, 'message': str(e)}), 500


def _config(experiment: Experiment, data: dict) -> ExperimentConfig:
    return ExperimentConfig(
        experiment=experiment,
        family=Family.parse(data.get('family', 'poly')),
        d=int(data.get('dim', 1)),
        m=float(data.get('m', FIG_M)),
        seed=int(data.get('seed', FIG3_SEED)),
        tol=float(data.get('tol', DEFAULT_TOL)),
        max_iter=int(data.get('max_iter', DEFAULT_MAX_ITER)),
        output_dir=app.config['OUTPUT_DIR'],
        steps=int(data.get('steps', DEFAULT_STEPS)),
        grid=int(data['grid']) if data.get('grid') else None,
    )


def _respond(payload: dict, ok: bool):
    return jsonify({'success': True, 'verified': bool(ok), **to_jsonable(payload)})


def _pair(value):
    if value is None:
        return None
    if len(value) != 2:
        raise ValueError(f"expected [lower, upper], got {value}")
    return float(value[0]), float(value[1])


@app.route('/api/health', methods=['GET'])
def health_check():
    """Health check endpoint"""
    try:
        return jsonify({
            'status': 'healthy',
            'timestamp': datetime.now().isoformat(),
            'constants': {'poly': poly_constant(), 'exp': exp_constant()},
            'output_dir': str(app.config['OUTPUT_DIR']),
            'environment': {
                'python_version': sys.version,
                'numpy_version': np.__version__,
            },
        })
    except Exception as e:
        return handle_error(e)


@app.route('/api/certify', methods=['POST'])
def certify():
    try:
        data = request.get_json(silent=True) or {}
        payload, ok = cli.run_certify(_config(Experiment.CERTIFY, data), _pair(data.get('region')))
        return _respond(payload, ok)
    except Exception as e:
        return handle_error(e)


@app.route('/api/iterate', methods=['POST'])
def iterate():
    try:
        data = request.get_json(silent=True) or {}
        payload, ok = cli.run_iterate(_config(Experiment.ITERATE, data), data.get('x0'))
        return _respond(payload, ok)
    except Exception as e:
        return handle_error(e)


@app.route('/api/robust', methods=['POST'])
def robust():
    try:
        data = request.get_json(silent=True) or {}
        payload, ok = cli.run_robust(_config(Experiment.ROBUST, data), data.get('x0'))
        return _respond(payload, ok)
    except Exception as e:
        return handle_error(e)


@app.route('/api/construct', methods=['POST'])
def construct():
    try:
        data = request.get_json(silent=True) or {}
        payload, ok = cli.run_construct(_config(Experiment.CONSTRUCT, data))
        return _respond(payload, ok)
    except Exception as e:
        return handle_error(e)


@app.route('/api/enumerate', methods=['POST'])
def enumerate_points():
    try:
        data = request.get_json(silent=True) or {}
        payload, ok = cli.run_enumerate(_config(Experiment.ENUMERATE, data), bool(data.get('validate', False)))
        return _respond(payload, ok)
    except Exception as e:
        return handle_error(e)


@app.route('/api/oracle/scan', methods=['POST'])
def oracle_scan():
    try:
        data = request.get_json(silent=True) or {}
        region = None
        if 'lower' in data and 'upper' in data:
            region = (float(data['lower']), float(data['upper']))
        config = _config(Experiment.ORACLE, {**data, 'grid': data.get('n')})
        payload, ok = cli.run_oracle(config, 'scan', region)
        return _respond(payload, ok)
    except Exception as e:
        return handle_error(e)


@app.route('/api/oracle/quadratic', methods=['POST'])
def oracle_quadratic():
    try:
        data = request.get_json(silent=True) or {}
        coefficients = [float(data['a']), float(data['b']), float(data['c'])]
        payload, ok = cli.run_oracle(_config(Experiment.ORACLE, data), 'quadratic', coefficients=coefficients)
        return _respond(payload, ok)
    except Exception as e:
        return handle_error(e)


@app.route('/api/figures/<name>', methods=['POST'])
def figures(name):
    try:
        experiment = Experiment(name)
        if experiment not in (Experiment.FIG1, Experiment.FIG2, Experiment.FIG3):
            raise ValueError(f"unknown figure {name!r}")
        data = request.get_json(silent=True) or {}
        payload, ok = cli.run_figure(_config(experiment, data))
        payload['files'] = [Path(f).name for f in payload['files']]
        return _respond(payload, ok)
    except Exception as e:
        return handle_error(e)


@app.route('/api/files/<filename>', methods=['GET'])
def output_file(filename):
    safe = secure_filename(filename)
    directory = Path(app.config['OUTPUT_DIR']).resolve()
    if not safe or not (directory / safe).is_file():
        return jsonify({'success': False, 'message': 'File not found'}), 404
    return send_from_directory(directory, safe)


@app.errorhandler(404)
def not_found(error):
    return jsonify({'success': False, 'message': 'Not found'}), 404


@app.errorhandler(405)
def method_not_allowed(error):
    return jsonify({'success': False, 'message': 'Method not allowed'}), 405


if __name__ == '__main__':
    port = int(os.environ.get('PORT', 5000))
    logger.info(f"starting fplnn API on port {port}, output directory {app.config['OUTPUT_DIR']}")
    app.run(host='0.0.0.0', port=port, debug=False, threaded=True)
