"""
Annulus Extremal Engine API
Main Flask application
"""

from flask import Flask, request, jsonify
from flask_cors import CORS
import logging
from datetime import datetime

from . import __version__
from .config import settings
from .core.errors import ExtremalError, Infeasible
from .core.serialization import to_json
from .engine import ExtremalEngine
from .models import Command, ErrorResponse, OutputFormat, RunConfig

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Initialize Flask app
app = Flask(__name__)
CORS(app)

# Initialize extremal engine
logger.info("Initializing Extremal Engine...")
try:
    engine = ExtremalEngine(settings)
    logger.info("Extremal Engine initialized successfully")
except Exception as e:
    logger.error(f"Failed to initialize Extremal Engine: {e}")
    engine = None


def status_for(exc: Exception) -> int:
    """HTTP status matching the CLI exit codes"""
    if isinstance(exc, Infeasible):
        return 422
    if isinstance(exc, ExtremalError) and isinstance(exc, ValueError):
        return 400
    return 500


def _document(body: str, mimetype: str = "application/json", status: int = 200):
    return app.response_class(body, status=status, mimetype=mimetype)


def _run(command: Command):
    if engine is None:
        return jsonify({"error": "unavailable", "message": "Extremal engine not initialized"}), 503

    try:
        run_config = RunConfig.from_dict(command.value, request.get_json(silent=True))
        result = engine.run(run_config)
        body = engine.render(run_config, result)
    except Exception as e:
        status = status_for(e)
        if status == 500:
            logger.error(f"{command.value} failed: {e}")
        return _document(to_json(ErrorResponse.from_exception(e)), status=status)

    if run_config.format == OutputFormat.CSV:
        return _document(body, mimetype="text/csv")
    return _document(body)


@app.route('/', methods=['GET'])
def root():
    """Root endpoint with service information"""
    return jsonify({
        "service": "Annulus Extremal Engine",
        "version": __version__,
        "status": "operational" if engine else "degraded",
        "description": "Extremal radial maps between annuli under a radial metric",
        "endpoints": {
            "bound": "POST /bound - Nitsche-type bound and feasibility",
            "solve": "POST /solve - Extremal profile, energy and distortion",
            "verify": "POST /verify - Residual, duality and perturbation checks",
            "closed_form": "POST /closed-form - Explicit solution and numeric comparison",
            "sweep": "POST /sweep - Parameter grid",
            "health": "GET /health - Health check",
            "stats": "GET /stats - Engine statistics"
        },
        "defaults": {
            "samples": settings.SAMPLES,
            "tol": settings.REL_TOL,
            "grid_size": settings.GRID_SIZE
        }
    })


@app.route('/health', methods=['GET'])
def health_check():
    """Health check endpoint"""
    return jsonify({
        "status": "healthy" if engine else "degraded",
        "service": "extremal-engine",
        "version": __version__,
        "timestamp": datetime.utcnow().isoformat(),
        "components": {
            "extremal_engine": engine is not None
        }
    })


@app.route('/stats', methods=['GET'])
def stats():
    """Engine statistics"""
    if engine is None:
        return jsonify({"error": "Extremal engine not initialized"}), 503
    return jsonify(engine.get_stats())


@app.route('/bound', methods=['POST'])
def bound():
    return _run(Command.BOUND)


@app.route('/solve', methods=['POST'])
def solve():
    return _run(Command.SOLVE)


@app.route('/verify', methods=['POST'])
def verify():
    return _run(Command.VERIFY)


@app.route('/closed-form', methods=['POST'])
def closed_form():
    return _run(Command.CLOSED_FORM)


@app.route('/sweep', methods=['POST'])
def sweep():
    return _run(Command.SWEEP)


if __name__ == "__main__":
    app.run(host=settings.HOST, port=settings.PORT, debug=settings.DEBUG)
