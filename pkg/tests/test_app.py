import pytest

from app import app


@pytest.fixture
def client(tmp_path):
    app.config['TESTING'] = True
    app.config['OUTPUT_DIR'] = tmp_path
    with app.test_client() as client:
        yield client


def test_health(client):
    response = client.get('/api/health')
    assert response.status_code == 200
    data = response.get_json()
    assert data['status'] == 'healthy'
    assert data['constants']['poly'] == pytest.approx(1.6979, abs=1e-4)


def test_certify(client):
    response = client.post('/api/certify', json={'family': 'exp', 'region': [-1.01, -0.81]})
    data = response.get_json()
    assert response.status_code == 200
    assert data['success'] and data['verified']
    assert data['certificate']['K_hat'] < 0.85


def test_quadratic(client):
    response = client.post('/api/oracle/quadratic', json={'a': 1.0, 'b': 0.0, 'c': 0.0})
    data = response.get_json()
    assert data['verified']
    assert data['report']['x1'] == pytest.approx(1.0)


def test_quadratic_without_fixed_points(client):
    response = client.post('/api/oracle/quadratic', json={'a': 1.0, 'b': 1.0, 'c': 1.0})
    assert response.status_code == 400
    assert response.get_json()['success'] is False


def test_quadratic_missing_coefficient(client):
    assert client.post('/api/oracle/quadratic', json={'a': 1.0}).status_code == 400


def test_construct_rejects_small_m(client):
    response = client.post('/api/construct', json={'dim': 3, 'm': 2})
    assert response.status_code == 400


def test_unknown_family(client):
    assert client.post('/api/certify', json={'family': 'relu'}).status_code == 400


def test_robust(client):
    response = client.post('/api/robust', json={'m': 15, 'seed': 1, 'x0': [1.4]})
    data = response.get_json()
    assert data['verified']
    assert data['final_error'] <= 20.0 / 15.0


def test_figure_and_download(client):
    response = client.post('/api/figures/fig1')
    data = response.get_json()
    assert data['verified']
    assert 'fig1.svg' in data['files']
    download = client.get('/api/files/fig1.svg')
    assert download.status_code == 200
    assert b'<svg' in download.data


def test_unknown_figure(client):
    assert client.post('/api/figures/certify').status_code == 400


def test_missing_file(client):
    assert client.get('/api/files/nothing.svg').status_code == 404


def test_unknown_route(client):
    assert client.get('/api/nothing').status_code == 404
